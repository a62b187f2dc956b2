"""Capacity evaluation, exact rate-region projection and Monte-Carlo simulation for
state-dependent semi-deterministic relay channels and MACs with cribbing."""

__version__ = "0.1.0"

from .channels import (MacDecision, MacSpec, PtpSeSpec, SdRcDecision, SdRcSpec, example_channel,
                       load_channel, parse_channel)
from .errors import (BinfwdError, BudgetExceededError, DomainError, InfeasibleError, SchemaError)
from .optimize import OptOptions, OptReport, maximize, trace_region
from .prob import (Alphabet, CondPmf, JointPmf, binary_entropy, compose, entropy, joint_entropy,
                   mutual_information)
from .rates import (closed_form_example, mac_bounds, mac_objective, ptp_se_objective, sdrc_objective,
                    sdrc_value)
