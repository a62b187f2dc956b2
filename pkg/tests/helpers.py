"""Random instances shared by the test modules."""
import numpy as np

from binfwd.channels import MacDecision, MacSpec, SdRcDecision, SdRcSpec
from binfwd.prob import Alphabet, JointPmf


def simplex(rng, shape):
    """Random conditional PMF: Dirichlet(1) rows along the last axis."""
    x = rng.gamma(1.0, size=shape)
    return x / x.sum(axis=-1, keepdims=True)


def random_joint(rng, sizes, zeros=0.0):
    names = [f"A{i}" for i in range(len(sizes))]
    p = rng.random(sizes) ** 3
    if zeros:
        p[rng.random(sizes) < zeros] = 0.0
    if p.sum() == 0:
        p.flat[0] = 1.0
    p = p / p.sum()
    return JointPmf([Alphabet(n, s) for n, s in zip(names, sizes)], p)


def random_sdrc(rng, ns=2, nx=2, nxr=2, nz=2, ny=2):
    p_s = simplex(rng, (ns,))
    z = rng.integers(0, nz, size=(nx, nxr, ns))
    kernel = simplex(rng, (nx, nxr, nz, ns, ny))
    return SdRcSpec(p_s, z, kernel)


def random_sdrc_decision(rng, spec, nu=2):
    sz = spec.sizes
    return SdRcDecision.noncausal(simplex(rng, (sz["S"], nu)), simplex(rng, (nu, sz["X_r"])),
                                  simplex(rng, (sz["X_r"], nu, sz["S"], sz["X"])))


def random_mac(rng, ns1=2, ns2=1, nx1=2, nx2=2, nz=2, ny=3, z_const=False):
    p = simplex(rng, (ns1 * ns2,)).reshape(ns1, ns2)
    z = np.zeros((nx1, ns1), int) if z_const else rng.integers(0, nz, size=(nx1, ns1))
    kernel = simplex(rng, (nx1, nx2, ns1, ns2, ny))
    return MacSpec(p, z, kernel, 1 if z_const else nz)


def random_mac_decision(rng, spec, nu=2, cribbing="strictly_causal", u_indep=False):
    sz = spec.sizes
    if u_indep:
        pu = simplex(rng, (nu,))
        px1 = simplex(rng, (sz["S1"], nu, sz["X1"]))
        pux1 = pu[None, :, None] * px1
    else:
        pux1 = simplex(rng, (sz["S1"], nu * sz["X1"])).reshape(sz["S1"], nu, sz["X1"])
    if cribbing == "strictly_causal":
        px2 = simplex(rng, (nu, sz["S2"], sz["X2"]))
    else:
        px2 = simplex(rng, (sz["Z"], nu, sz["S2"], sz["X2"]))
    return MacDecision(cribbing, pux1, px2)


def toy_sdrc(q=0.1):
    """Binary toy: Z = X; Y = X_r when S = 0 and Y = 0 when S = 1."""
    z = np.zeros((2, 2, 2), int)
    z[1] = 1
    k = np.zeros((2, 2, 2, 2, 2))
    k[:, :, :, 1, 0] = 1
    for xr in range(2):
        k[:, xr, :, 0, xr] = 1
    return SdRcSpec([1 - q, q], z, k)


def toy_decision():
    """U uniform and independent of S, X_r = U, X uniform."""
    return SdRcDecision.noncausal(np.full((2, 2), 0.5), np.eye(2), np.full((2, 2, 2, 2), 0.5))
