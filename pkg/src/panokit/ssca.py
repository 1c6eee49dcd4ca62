"""Spherical spatial cross-attention, numeric reference in float64.

Patch tokens H (N x d) attend to spherical position tokens S built from the
patch-center directions:

    E = enc(yaw, pitch)                      sinusoidal, 4F features
    S = gelu(E W1 + b1) W2 + b2              projection network
    Q = LN_h(H) Wq + bq,  K = LN_s(S) Wk + bk,  V = LN_s(S) Wv + bv
    A = concat_heads(softmax(Q_h K_h^T / sqrt(d_h)) V_h) Wo + bo
    out = H + alpha * A

``ssca_backward`` is the hand-derived gradient of sum(out ** 2); it is
checked against central differences and against ``naive_forward``, an
independent loop-based implementation.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .sphere_geom import pixels_to_angles

LN_EPS = 1e-5
DEFAULT_FREQS = 6
DEFAULT_GATE = 1e-2
_GELU_C = math.sqrt(2.0 / math.pi)

PARAM_ORDER = ("W1", "b1", "W2", "b2", "ln_h_g", "ln_h_b", "ln_s_g", "ln_s_b",
               "Wq", "bq", "Wk", "bk", "Wv", "bv", "Wo", "bo", "alpha")
SNAPSHOT_MAGIC = b"SSCAPRM1"


class SscaDimError(ValueError):
    pass


@dataclass(frozen=True)
class PatchGridSpec:
    width: int
    height: int
    patch: int

    def __post_init__(self) -> None:
        if self.patch <= 0 or self.width % self.patch or self.height % self.patch:
            raise SscaDimError(f"patch size {self.patch} must divide the image size {self.width}x{self.height}")

    @property
    def grid(self) -> Tuple[int, int]:
        return self.height // self.patch, self.width // self.patch

    @property
    def count(self) -> int:
        rows, cols = self.grid
        return rows * cols


def patch_centers(spec: PatchGridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """(yaw, pitch) of every patch center, row-major."""
    rows, cols = spec.grid
    r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    u = (c.ravel() + 0.5) * spec.patch
    v = (r.ravel() + 0.5) * spec.patch
    return pixels_to_angles(u, v, spec.width, spec.height)


def sinusoidal_encode(yaw, pitch, n_freqs: int = DEFAULT_FREQS) -> np.ndarray:
    """[sin 2^k yaw, cos 2^k yaw, sin 2^k pitch, cos 2^k pitch] for k < F."""
    if n_freqs < 1:
        raise SscaDimError("need at least one frequency")
    yaw = np.atleast_1d(np.asarray(yaw, dtype=np.float64))
    pitch = np.atleast_1d(np.asarray(pitch, dtype=np.float64))
    out = np.empty((yaw.size, 4 * n_freqs))
    for k in range(n_freqs):
        f = float(2 ** k)
        out[:, 4 * k] = np.sin(f * yaw)
        out[:, 4 * k + 1] = np.cos(f * yaw)
        out[:, 4 * k + 2] = np.sin(f * pitch)
        out[:, 4 * k + 3] = np.cos(f * pitch)
    return out


def encode_grad(yaw, pitch, n_freqs: int, d_enc: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Chain ``d_enc`` (N x 4F) back to per-token yaw and pitch."""
    yaw = np.atleast_1d(np.asarray(yaw, dtype=np.float64))
    pitch = np.atleast_1d(np.asarray(pitch, dtype=np.float64))
    g_yaw = np.zeros(yaw.size)
    g_pitch = np.zeros(pitch.size)
    for k in range(n_freqs):
        f = float(2 ** k)
        g_yaw += d_enc[:, 4 * k] * f * np.cos(f * yaw) - d_enc[:, 4 * k + 1] * f * np.sin(f * yaw)
        g_pitch += d_enc[:, 4 * k + 2] * f * np.cos(f * pitch) - d_enc[:, 4 * k + 3] * f * np.sin(f * pitch)
    return g_yaw, g_pitch


def gelu(u: np.ndarray) -> np.ndarray:
    return 0.5 * u * (1.0 + np.tanh(_GELU_C * (u + 0.044715 * u ** 3)))


def gelu_grad(u: np.ndarray) -> np.ndarray:
    t = np.tanh(_GELU_C * (u + 0.044715 * u ** 3))
    return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * u * u)


# ---------------------------------------------------------------------------
# Parameters


@dataclass
class SscaParams:
    n_freqs: int
    d: int
    heads: int
    arrays: Dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if self.heads < 1 or self.d % self.heads:
            raise SscaDimError(f"hidden dimension d={self.d} is not divisible by heads h={self.heads}")
        shapes = self.shapes(self.n_freqs, self.d)
        for name in PARAM_ORDER:
            if name not in self.arrays:
                raise SscaDimError(f"missing parameter {name}")
            arr = np.asarray(self.arrays[name], dtype=np.float64)
            if arr.shape != shapes[name]:
                raise SscaDimError(f"parameter {name}: shape {arr.shape}, expected {shapes[name]}")
            self.arrays[name] = arr

    @staticmethod
    def shapes(n_freqs: int, d: int) -> Dict[str, tuple]:
        out = {"W1": (4 * n_freqs, d), "W2": (d, d)}
        for name in ("Wq", "Wk", "Wv", "Wo"):
            out[name] = (d, d)
        for name in ("b1", "b2", "ln_h_g", "ln_h_b", "ln_s_g", "ln_s_b", "bq", "bk", "bv", "bo", "alpha"):
            out[name] = (d,)
        return out

    @classmethod
    def init(cls, d: int, heads: int, n_freqs: int = DEFAULT_FREQS, seed: int = 0,
             gate: float = DEFAULT_GATE) -> "SscaParams":
        if heads < 1 or d % heads:
            raise SscaDimError(f"hidden dimension d={d} is not divisible by heads h={heads}")
        rng = np.random.default_rng(seed)
        shapes = cls.shapes(n_freqs, d)
        arrays: Dict[str, np.ndarray] = {}
        fan_in = {"W1": 4 * n_freqs, "b1": 4 * n_freqs}
        for name in PARAM_ORDER:
            if name.startswith("ln_"):
                arrays[name] = np.ones(d) if name.endswith("_g") else np.zeros(d)
            elif name == "alpha":
                arrays[name] = np.full(d, gate)
            else:
                bound = 1.0 / math.sqrt(fan_in.get(name, d))
                arrays[name] = rng.uniform(-bound, bound, shapes[name])
        return cls(n_freqs, d, heads, arrays)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def copy(self) -> "SscaParams":
        return SscaParams(self.n_freqs, self.d, self.heads, {k: v.copy() for k, v in self.arrays.items()})


def save_params(params: SscaParams, path) -> None:
    """Binary snapshot: magic, u32 version/F/d/h, then arrays as <f8 in fixed order."""
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<4I", 1, params.n_freqs, params.d, params.heads))
        for name in PARAM_ORDER:
            fh.write(np.ascontiguousarray(params[name], dtype="<f8").tobytes())


def load_params(path) -> SscaParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != SNAPSHOT_MAGIC:
        raise SscaDimError("not an SSCA parameter snapshot")
    version, n_freqs, d, heads = struct.unpack("<4I", blob[8:24])
    if version != 1:
        raise SscaDimError(f"unsupported snapshot version {version}")
    shapes = SscaParams.shapes(n_freqs, d)
    expected = 24 + 8 * sum(int(np.prod(shapes[name])) for name in PARAM_ORDER)
    if len(blob) != expected:
        raise SscaDimError(f"snapshot size {len(blob)} does not match its header ({expected} bytes)")
    arrays, off = {}, 24
    for name in PARAM_ORDER:
        n = int(np.prod(shapes[name]))
        arrays[name] = np.frombuffer(blob, dtype="<f8", count=n, offset=off).reshape(shapes[name]).astype(np.float64)
        off += 8 * n
    return SscaParams(n_freqs, d, heads, arrays)


# ---------------------------------------------------------------------------
# Forward / backward


def _layer_norm(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv)


def _layer_norm_back(dy: np.ndarray, g: np.ndarray, cache):
    xhat, inv = cache
    dxhat = dy * g
    dx = inv * (dxhat - dxhat.mean(axis=1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=1, keepdims=True))
    return dx, (dy * xhat).sum(axis=0), dy.sum(axis=0)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ForwardCache:
    out: np.ndarray
    attn_out: np.ndarray  # A before gating
    probs: np.ndarray  # heads x N x N
    tensors: Dict[str, object]


def _check_dims(H0: np.ndarray, yaw: np.ndarray, params: SscaParams) -> None:
    if H0.ndim != 2:
        raise SscaDimError("H0 must be a 2-D token matrix")
    if H0.shape[1] != params.d:
        raise SscaDimError(f"hidden dimension d: H0 has {H0.shape[1]}, params expect {params.d}")
    if H0.shape[0] != yaw.size:
        raise SscaDimError(f"token count N: H0 has {H0.shape[0]} rows, grid has {yaw.size} patches")
    if not np.all(np.isfinite(H0)):
        raise SscaDimError("H0 contains non-finite values")


def ssca_forward_angles(H0: np.ndarray, yaw, pitch, params: SscaParams) -> ForwardCache:
    H0 = np.asarray(H0, dtype=np.float64)
    yaw = np.atleast_1d(np.asarray(yaw, dtype=np.float64))
    pitch = np.atleast_1d(np.asarray(pitch, dtype=np.float64))
    _check_dims(H0, yaw, params)
    p = params.arrays
    n, d, h = H0.shape[0], params.d, params.heads
    dh = d // h
    scale = 1.0 / math.sqrt(dh)

    E = sinusoidal_encode(yaw, pitch, params.n_freqs)
    U = E @ p["W1"] + p["b1"]
    Z = gelu(U)
    S = Z @ p["W2"] + p["b2"]
    Hn, ln_h = _layer_norm(H0, p["ln_h_g"], p["ln_h_b"])
    Sn, ln_s = _layer_norm(S, p["ln_s_g"], p["ln_s_b"])
    Q = Hn @ p["Wq"] + p["bq"]
    K = Sn @ p["Wk"] + p["bk"]
    V = Sn @ p["Wv"] + p["bv"]
    Qh = Q.reshape(n, h, dh).transpose(1, 0, 2)
    Kh = K.reshape(n, h, dh).transpose(1, 0, 2)
    Vh = V.reshape(n, h, dh).transpose(1, 0, 2)
    P = _softmax(Qh @ Kh.transpose(0, 2, 1) * scale)
    C = (P @ Vh).transpose(1, 0, 2).reshape(n, d)
    A = C @ p["Wo"] + p["bo"]
    out = H0 + p["alpha"] * A
    tensors = dict(E=E, U=U, Z=Z, S=S, Hn=Hn, Sn=Sn, ln_h=ln_h, ln_s=ln_s, Qh=Qh, Kh=Kh, Vh=Vh, C=C,
                   yaw=yaw, pitch=pitch, scale=scale)
    return ForwardCache(out, A, P, tensors)


def ssca_forward(H0: np.ndarray, spec: PatchGridSpec, params: SscaParams) -> np.ndarray:
    yaw, pitch = patch_centers(spec)
    return ssca_forward_angles(H0, yaw, pitch, params).out


def ssca_backward(H0: np.ndarray, cache: ForwardCache, params: SscaParams,
                  d_out: Optional[np.ndarray] = None) -> Dict[str, np.ndarray]:
    """Gradients of sum(out**2) (or of <d_out, out> when given)."""
    p = params.arrays
    t = cache.tensors
    n, d, h = cache.out.shape[0], params.d, params.heads
    dh = d // h
    G = 2.0 * cache.out if d_out is None else np.asarray(d_out, dtype=np.float64)
    grads: Dict[str, np.ndarray] = {}
    grads["alpha"] = (G * cache.attn_out).sum(axis=0)
    dH0 = G.copy()
    dA = G * p["alpha"]
    grads["Wo"] = t["C"].T @ dA
    grads["bo"] = dA.sum(axis=0)
    dC = (dA @ p["Wo"].T).reshape(n, h, dh).transpose(1, 0, 2)
    P, Qh, Kh, Vh, scale = cache.probs, t["Qh"], t["Kh"], t["Vh"], t["scale"]
    dP = dC @ Vh.transpose(0, 2, 1)
    dVh = P.transpose(0, 2, 1) @ dC
    dZs = P * (dP - (dP * P).sum(axis=-1, keepdims=True))
    dQh = dZs @ Kh * scale
    dKh = dZs.transpose(0, 2, 1) @ Qh * scale
    merge = lambda x: x.transpose(1, 0, 2).reshape(n, d)
    dQ, dK, dV = merge(dQh), merge(dKh), merge(dVh)
    grads["Wq"] = t["Hn"].T @ dQ
    grads["bq"] = dQ.sum(axis=0)
    grads["Wk"] = t["Sn"].T @ dK
    grads["bk"] = dK.sum(axis=0)
    grads["Wv"] = t["Sn"].T @ dV
    grads["bv"] = dV.sum(axis=0)
    dHn = dQ @ p["Wq"].T
    dSn = dK @ p["Wk"].T + dV @ p["Wv"].T
    dx, grads["ln_h_g"], grads["ln_h_b"] = _layer_norm_back(dHn, p["ln_h_g"], t["ln_h"])
    dH0 += dx
    dS, grads["ln_s_g"], grads["ln_s_b"] = _layer_norm_back(dSn, p["ln_s_g"], t["ln_s"])
    grads["W2"] = t["Z"].T @ dS
    grads["b2"] = dS.sum(axis=0)
    dU = (dS @ p["W2"].T) * gelu_grad(t["U"])
    grads["W1"] = t["E"].T @ dU
    grads["b1"] = dU.sum(axis=0)
    dE = dU @ p["W1"].T
    grads["yaw"], grads["pitch"] = encode_grad(t["yaw"], t["pitch"], params.n_freqs, dE)
    grads["H0"] = dH0
    return grads


# ---------------------------------------------------------------------------
# Independent loop implementation (oracle)


def naive_forward(H0, yaw, pitch, params: SscaParams) -> List[List[float]]:
    """Plain-Python per-token, per-head loops; no shared code with the fast path."""
    p = {k: np.asarray(v).tolist() for k, v in params.arrays.items()}
    H0 = np.asarray(H0, dtype=np.float64).tolist()
    yaw = np.atleast_1d(yaw).tolist()
    pitch = np.atleast_1d(pitch).tolist()
    n, d, h, F = len(H0), params.d, params.heads, params.n_freqs
    dh = d // h

    def matvec(x, W, b):
        return [sum(x[i] * W[i][j] for i in range(len(x))) + b[j] for j in range(len(b))]

    def norm(x, g, b):
        mu = sum(x) / len(x)
        var = sum((v - mu) ** 2 for v in x) / len(x)
        s = math.sqrt(var + LN_EPS)
        return [(x[i] - mu) / s * g[i] + b[i] for i in range(len(x))]

    def act(u):
        return 0.5 * u * (1.0 + math.tanh(_GELU_C * (u + 0.044715 * u ** 3)))

    S = []
    for i in range(n):
        enc = []
        for k in range(F):
            f = 2.0 ** k
            enc += [math.sin(f * yaw[i]), math.cos(f * yaw[i]), math.sin(f * pitch[i]), math.cos(f * pitch[i])]
        hidden = [act(v) for v in matvec(enc, p["W1"], p["b1"])]
        S.append(matvec(hidden, p["W2"], p["b2"]))
    Q = [matvec(norm(H0[i], p["ln_h_g"], p["ln_h_b"]), p["Wq"], p["bq"]) for i in range(n)]
    Sn = [norm(S[j], p["ln_s_g"], p["ln_s_b"]) for j in range(n)]
    K = [matvec(s, p["Wk"], p["bk"]) for s in Sn]
    V = [matvec(s, p["Wv"], p["bv"]) for s in Sn]
    out = []
    for i in range(n):
        concat = []
        for head in range(h):
            lo, hi = head * dh, (head + 1) * dh
            scores = [sum(Q[i][c] * K[j][c] for c in range(lo, hi)) / math.sqrt(dh) for j in range(n)]
            top = max(scores)
            w = [math.exp(s - top) for s in scores]
            total = sum(w)
            concat += [sum(w[j] / total * V[j][c] for j in range(n)) for c in range(lo, hi)]
        a = matvec(concat, p["Wo"], p["bo"])
        out.append([H0[i][c] + p["alpha"][c] * a[c] for c in range(d)])
    return out


# ---------------------------------------------------------------------------
# Gradient check

GRAD_STEP = 1e-5
# Relative error uses max(|analytic|, |numeric|, floor) as denominator so
# entries whose true gradient is ~0 are judged on an absolute scale.
GRAD_FLOOR = 1e-3


def _loss(H0, yaw, pitch, params) -> float:
    out = ssca_forward_angles(H0, yaw, pitch, params).out
    return float((out * out).sum())


def grad_check(params: SscaParams, H0: np.ndarray, yaw, pitch, step: float = GRAD_STEP,
               floor: float = GRAD_FLOOR) -> Dict[str, float]:
    """Max relative error between analytic and central-difference gradients, per group."""
    H0 = np.asarray(H0, dtype=np.float64)
    yaw = np.atleast_1d(np.asarray(yaw, dtype=np.float64)).copy()
    pitch = np.atleast_1d(np.asarray(pitch, dtype=np.float64)).copy()
    analytic = ssca_backward(H0, ssca_forward_angles(H0, yaw, pitch, params), params)
    report: Dict[str, float] = {}

    def check(name: str, arr: np.ndarray) -> None:
        worst = 0.0
        flat = arr.reshape(-1)
        g = analytic[name].reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            up = _loss(H0, yaw, pitch, params)
            flat[k] = orig - step
            down = _loss(H0, yaw, pitch, params)
            flat[k] = orig
            num = (up - down) / (2 * step)
            worst = max(worst, abs(num - g[k]) / max(abs(num), abs(g[k]), floor))
        report[name] = worst

    for name in PARAM_ORDER:
        check(name, params.arrays[name])
    check("H0", H0)
    check("yaw", yaw)
    check("pitch", pitch)
    return report


# ---------------------------------------------------------------------------
# Invariant suite


def _random_case(seed: int, n: int, d: int, h: int, n_freqs: int = DEFAULT_FREQS, gate: Optional[float] = None):
    rng = np.random.default_rng(seed)
    params = SscaParams.init(d, h, n_freqs, seed=seed)
    params.arrays["alpha"] = rng.uniform(-1.0, 1.0, d) if gate is None else np.full(d, gate)
    for name in ("ln_h_g", "ln_s_g"):
        params.arrays[name] = rng.uniform(0.5, 1.5, d)
    for name in ("ln_h_b", "ln_s_b"):
        params.arrays[name] = rng.uniform(-0.2, 0.2, d)
    H0 = rng.normal(size=(n, d))
    yaw = rng.uniform(-math.pi, math.pi, n)
    pitch = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, n)
    return params, H0, yaw, pitch


def check_suite(n: int = 8, d: int = 16, h: int = 2, seeds: int = 20, self_test: bool = False) -> List[Tuple[str, bool, str]]:
    """Run every SSCA property; returns (name, passed, detail) rows.

    ``self_test`` appends negative controls that must fail (a nonzero gate
    fed to the identity check), reported as passed when they do fail.
    """
    if h < 1 or d % h:
        raise SscaDimError(f"hidden dimension d={d} is not divisible by heads h={h}")
    rows: List[Tuple[str, bool, str]] = []
    params, H0, yaw, pitch = _random_case(0, n, d, h)

    zero = params.copy()
    zero.arrays["alpha"] = np.zeros(d)
    out = ssca_forward_angles(H0, yaw, pitch, zero).out
    rows.append(("gate-zero identity", bool(np.array_equal(out, H0)), "max |out - H0| = %.3g" % np.abs(out - H0).max()))

    cache = ssca_forward_angles(H0, yaw, pitch, params)
    rows.append(("shape preserved", cache.out.shape == H0.shape, f"{cache.out.shape}"))
    row_err = float(np.abs(cache.probs.sum(axis=-1) - 1.0).max())
    rows.append(("attention rows sum to 1", row_err <= 1e-12, f"max err {row_err:.3g}"))

    perm = np.random.default_rng(1).permutation(n)
    out_p = ssca_forward_angles(H0[perm], yaw[perm], pitch[perm], params).out
    perm_err = float(np.abs(out_p - cache.out[perm]).max())
    rows.append(("joint permutation equivariance", perm_err <= 1e-12, f"max err {perm_err:.3g}"))

    naive = np.array(naive_forward(H0, yaw, pitch, params))
    naive_err = float(np.abs(naive - cache.out).max())
    rows.append(("naive-loop oracle agreement", naive_err <= 1e-10, f"max err {naive_err:.3g}"))

    worst, worst_seed = 0.0, 0
    for seed in range(seeds):
        pr, h0, yw, pt = _random_case(seed, n, d, h)
        err = max(grad_check(pr, h0, yw, pt).values())
        if err > worst:
            worst, worst_seed = err, seed
    rows.append((f"finite-difference gradients ({seeds} seeds)", bool(worst < 1e-4), f"max rel err {worst:.3g} (seed {worst_seed})"))

    if self_test:
        out = ssca_forward_angles(H0, yaw, pitch, params).out
        identity_holds = bool(np.array_equal(out, H0))
        rows.append(("self-test: nonzero gate breaks identity (expected failure)", not identity_holds,
                     "identity check correctly fails" if not identity_holds else "identity unexpectedly held"))
    return rows
