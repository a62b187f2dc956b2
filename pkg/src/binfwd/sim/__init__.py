"""Monte-Carlo experiments: indirect covering and the bin-forward relay scheme."""
from .codebook import (BinMap, BlockCodebook, EncodeResult, SchemeLaws, SchemeRates,
                       build_block_codebook, cover, encode_block, relay_step, relay_update)
from .covering import CoveringReport, covering_experiment
from .scheme import CAUSES, BlockDecision, SimReport, simulate_sdrc, sliding_window_decode
from .typical import cell_index, is_typical, typical_mask

__all__ = [
    "BinMap", "BlockCodebook", "EncodeResult", "SchemeLaws", "SchemeRates", "build_block_codebook",
    "cover", "encode_block", "relay_step", "relay_update", "CoveringReport", "covering_experiment",
    "CAUSES", "BlockDecision", "SimReport", "simulate_sdrc", "sliding_window_decode",
    "cell_index", "is_typical", "typical_mask",
]
