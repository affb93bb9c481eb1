"""Gradient-reversal adversarial training on small synthetic domains.

Featurizer 2 -> H -> B (rectifier hidden layer, linear bottleneck), logistic
classifier B -> 1 and discriminator B -> H -> 1. Backpropagation is written out
by hand. The discriminator gradient reaching the featurizer is multiplied by
``-grl_coeff``.

Randomness is split into independent streams (data, featurizer/classifier
init, discriminator init, source batches, target batches), so a run with
``grl_coeff = 0`` follows the source-only run exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, asdict, replace
from typing import Optional, Sequence

import numpy as np

from .bounds import joint_error_lower_bound
from .divergences import bernoulli_js_distance, js_distance
from .domain import DiscreteDistribution
from .errors import ConfigError, DivergedTraining, InsufficientPoints

CSV_FIELDS = ("epoch", "source_err", "target_acc", "disc_acc", "djs_z", "djs_y", "lower_bound", "joint_err")
HIST_BINS = 32
CONSISTENCY_SLACK = 0.05

# rng streams
_DATA, _INIT, _DISC_INIT, _SRC_BATCH, _TGT_BATCH, _HOLDOUT = range(6)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream,)))


@dataclass(frozen=True)
class SyntheticDomainSpec:
    """Two-class Gaussian blobs per domain; ``class_means[d][y]`` is the mean of class y in domain d."""

    # the target is shifted along the second axis so the featurizer can tell domains apart
    class_means: tuple = (((-1.0, 0.0), (1.0, 0.0)), ((-1.0, 2.0), (1.0, 2.0)))
    class_stddev: float = 0.5
    label_prob: tuple = (0.5, 0.9)
    n_train: int = 1000
    n_test: int = 2000
    seed: int = 0

    def __post_init__(self):
        means = np.asarray(self.class_means, dtype=float)
        if means.shape != (2, 2, 2):
            raise ConfigError("class_means must be two 2-D points for each of two domains")
        object.__setattr__(self, "class_means", tuple(tuple(tuple(p) for p in d) for d in means.tolist()))
        object.__setattr__(self, "label_prob", tuple(float(p) for p in self.label_prob))
        if len(self.label_prob) != 2 or not all(0.0 <= p <= 1.0 for p in self.label_prob):
            raise ConfigError("label_prob must be two probabilities")
        if not self.class_stddev > 0:
            raise ConfigError("class_stddev must be positive")
        if self.n_train < 10 or self.n_test < 10:
            raise ConfigError("n_train and n_test must be at least 10")

    @property
    def djs_y(self) -> float:
        return bernoulli_js_distance(*self.label_prob)


@dataclass(frozen=True)
class LabeledData:
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.y)


def _draw(spec: SyntheticDomainSpec, domain: int, n: int, rng: np.random.Generator) -> LabeledData:
    y = (rng.random(n) < spec.label_prob[domain]).astype(float)
    means = np.asarray(spec.class_means[domain])
    x = means[y.astype(int)] + spec.class_stddev * rng.standard_normal((n, 2))
    return LabeledData(x, y)


def make_domains(spec: SyntheticDomainSpec) -> tuple[LabeledData, LabeledData, LabeledData]:
    """(labeled source train, target train, held-out target test); target train labels are never used."""
    rng = _rng(spec.seed, _DATA)
    return _draw(spec, 0, spec.n_train, rng), _draw(spec, 1, spec.n_train, rng), _draw(spec, 1, spec.n_test, rng)


def source_holdout(spec: SyntheticDomainSpec) -> LabeledData:
    return _draw(spec, 0, spec.n_test, _rng(spec.seed, _HOLDOUT))


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------

PARAM_NAMES = ("W1", "b1", "W2", "b2", "wc", "bc", "D1", "d1", "D2", "d2")
FEATURIZER = ("W1", "b1", "W2", "b2")
CLASSIFIER = ("wc", "bc")
DISCRIMINATOR = ("D1", "d1", "D2", "d2")


@dataclass
class NetParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    wc: np.ndarray
    bc: np.ndarray
    D1: np.ndarray
    d1: np.ndarray
    D2: np.ndarray
    d2: np.ndarray

    @classmethod
    def init(cls, hidden: int, bottleneck: int, seed: int) -> "NetParams":
        if bottleneck not in (1, 2):
            raise ConfigError("bottleneck must be 1 or 2")
        r, rd = _rng(seed, _INIT), _rng(seed, _DISC_INIT)

        def glorot(g, fan_in, fan_out):
            a = math.sqrt(6.0 / (fan_in + fan_out))
            return g.uniform(-a, a, (fan_in, fan_out))

        return cls(
            W1=glorot(r, 2, hidden),
            b1=np.zeros(hidden),
            W2=glorot(r, hidden, bottleneck),
            b2=np.zeros(bottleneck),
            wc=glorot(r, bottleneck, 1),
            bc=np.zeros(1),
            D1=glorot(rd, bottleneck, hidden),
            d1=np.zeros(hidden),
            D2=glorot(rd, hidden, 1),
            d2=np.zeros(1),
        )

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def copy(self) -> "NetParams":
        return NetParams(**{k: v.copy() for k, v in self.arrays().items()})

    def finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays().values())


def _sigmoid(a: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def _bce(logit: np.ndarray, y: np.ndarray) -> float:
    # log(1 + e^a) - y a, stable
    return float(np.mean(np.logaddexp(0.0, logit) - y * logit))


def features(p: NetParams, x: np.ndarray):
    a1 = x @ p.W1 + p.b1
    h1 = np.maximum(a1, 0.0)
    return a1, h1, h1 @ p.W2 + p.b2


def class_logit(p: NetParams, z: np.ndarray) -> np.ndarray:
    return (z @ p.wc + p.bc)[:, 0]


def disc_forward(p: NetParams, z: np.ndarray):
    e1 = z @ p.D1 + p.d1
    g1 = np.maximum(e1, 0.0)
    return e1, g1, (g1 @ p.D2 + p.d2)[:, 0]


@dataclass(frozen=True)
class Batch:
    """Labeled source points and unlabeled target points; domain label 1 marks the source."""

    xs: np.ndarray
    ys: np.ndarray
    xt: np.ndarray


def losses(p: NetParams, batch: Batch) -> tuple[float, float]:
    """(classifier loss on source, discriminator loss on source and target)."""
    _, _, zs = features(p, batch.xs)
    _, _, zt = features(p, batch.xt)
    lc = _bce(class_logit(p, zs), batch.ys)
    z = np.vstack([zs, zt])
    d = np.concatenate([np.ones(len(zs)), np.zeros(len(zt))])
    ld = _bce(disc_forward(p, z)[2], d)
    return lc, ld


def _feat_backward(p: NetParams, x, a1, h1, gz) -> dict:
    gh1 = gz @ p.W2.T
    ga1 = gh1 * (a1 > 0)
    return {"W1": x.T @ ga1, "b1": ga1.sum(0), "W2": h1.T @ gz, "b2": gz.sum(0)}


def gradient_parts(p: NetParams, batch: Batch) -> dict:
    """Gradients of each loss: classifier-loss grads, discriminator-loss grads, and both featurizer parts."""
    xs, ys, xt = batch.xs, batch.ys, batch.xt
    ns, nt = len(xs), len(xt)
    a1s, h1s, zs = features(p, xs)
    a1t, h1t, zt = features(p, xt)

    # classifier loss
    gl = (_sigmoid(class_logit(p, zs)) - ys)[:, None] / ns
    cls_grads = {"wc": zs.T @ gl, "bc": gl.sum(0)}
    feat_cls = _feat_backward(p, xs, a1s, h1s, gl @ p.wc.T)

    # discriminator loss over the concatenated batch
    z = np.vstack([zs, zt])
    d = np.concatenate([np.ones(ns), np.zeros(nt)])
    e1, g1, logit = disc_forward(p, z)
    gd = (_sigmoid(logit) - d)[:, None] / (ns + nt)
    disc_grads = {"D2": g1.T @ gd, "d2": gd.sum(0)}
    ge1 = (gd @ p.D2.T) * (e1 > 0)
    disc_grads.update({"D1": z.T @ ge1, "d1": ge1.sum(0)})
    gz = ge1 @ p.D1.T
    fs = _feat_backward(p, xs, a1s, h1s, gz[:ns])
    ft = _feat_backward(p, xt, a1t, h1t, gz[ns:])
    feat_disc = {k: fs[k] + ft[k] for k in fs}
    return {"classifier": cls_grads, "discriminator": disc_grads, "feat_cls": feat_cls, "feat_disc": feat_disc}


def backward(p: NetParams, batch: Batch, grl_coeff: float) -> dict:
    """Update directions for every parameter; the featurizer receives the reversed discriminator gradient."""
    parts = gradient_parts(p, batch)
    grads = dict(parts["classifier"])
    grads.update(parts["discriminator"])
    for k in FEATURIZER:
        g = parts["feat_cls"][k]
        grads[k] = g - grl_coeff * parts["feat_disc"][k] if grl_coeff != 0.0 else g.copy()
    return grads


def _pattern(p: NetParams, batch: Batch) -> np.ndarray:
    a1s, _, zs = features(p, batch.xs)
    a1t, _, zt = features(p, batch.xt)
    e1 = disc_forward(p, np.vstack([zs, zt]))[0]
    return np.concatenate([(a1s > 0).ravel(), (a1t > 0).ravel(), (e1 > 0).ravel()])


def gradient_check(params: NetParams, batch: Batch, epsilon: float = 1e-5, grl_coeff: float = 1.0) -> float:
    """Max relative error between ``backward`` and central differences.

    Reference objectives: featurizer against ``L_cls - grl_coeff * L_disc``,
    classifier against ``L_cls``, discriminator against ``L_disc``. When the two
    probes land on different sides of a rectifier kink the step is shrunk for
    that entry (down to 1e-9); entries sitting on a kink at that scale are skipped.
    """
    if not 1e-6 <= epsilon <= 1e-3:
        raise ValueError("epsilon must lie in [1e-6, 1e-3]")
    analytic = backward(params, batch, grl_coeff)
    p = params.copy()
    base = _pattern(p, batch)

    def objective(name):
        lc, ld = losses(p, batch)
        if name in FEATURIZER:
            return lc - grl_coeff * ld
        return lc if name in CLASSIFIER else ld

    worst = 0.0
    for name in PARAM_NAMES:
        arr = getattr(p, name)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            eps = epsilon
            while True:
                arr[idx] = old + eps
                up, pu = objective(name), _pattern(p, batch)
                arr[idx] = old - eps
                dn, pd = objective(name), _pattern(p, batch)
                arr[idx] = old
                smooth = np.array_equal(pu, base) and np.array_equal(pd, base)
                if smooth or eps < 1e-9:
                    break
                eps /= 10.0
            if not smooth:
                continue
            num = (up - dn) / (2.0 * eps)
            a = analytic[name][idx]
            worst = max(worst, abs(a - num) / max(abs(a), abs(num), 1e-6))
    return worst


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hyper:
    epochs: int = 200
    lr: float = 0.02
    disc_lr: Optional[float] = None
    batch: int = 64
    bottleneck: int = 1
    hidden: int = 32
    grl_coeff: float = 1.0
    grl_schedule: str = "constant"
    adversarial: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch < 1 or self.hidden < 1:
            raise ConfigError("batch and hidden must be >= 1")
        if self.bottleneck not in (1, 2):
            raise ConfigError("bottleneck must be 1 or 2")
        if self.grl_schedule not in ("constant", "anneal"):
            raise ConfigError("grl_schedule must be 'constant' or 'anneal'")
        for v in (self.lr, self.grl_coeff) + (() if self.disc_lr is None else (self.disc_lr,)):
            if not math.isfinite(v):
                raise ConfigError("hyperparameters must be finite")

    def grl_at(self, epoch: int) -> float:
        if self.grl_schedule == "constant":
            return self.grl_coeff
        prog = epoch / max(self.epochs - 1, 1)
        return self.grl_coeff * (2.0 / (1.0 + math.exp(-10.0 * prog)) - 1.0)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    source_err: float
    target_acc: float
    disc_acc: float
    djs_z: float
    djs_y: float
    lower_bound: float
    joint_err: float

    def row(self) -> tuple:
        return tuple(getattr(self, k) for k in CSV_FIELDS)


@dataclass(frozen=True)
class Trajectory:
    records: tuple

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def epochs(self) -> np.ndarray:
        return self.column("epoch")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.records:
            w.writerow([r.epoch] + [repr(float(v)) for v in r.row()[1:]])
        return buf.getvalue()

    def consistency_holds(self, slack: float = CONSISTENCY_SLACK) -> bool:
        """joint_err + slack >= lower_bound at every epoch where djs_y >= djs_z."""
        return all(r.joint_err + slack >= r.lower_bound for r in self.records if r.djs_y >= r.djs_z)


def histogram_js(zs: np.ndarray, zt: np.ndarray, bins: int = HIST_BINS) -> float:
    """JS distance between per-domain histograms on a shared grid over the observed range."""
    z = np.vstack([zs, zt])
    lo, hi = z.min(axis=0), z.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    edges = [np.linspace(lo[j], hi[j], bins + 1) for j in range(z.shape[1])]
    hs = np.histogramdd(zs, bins=edges)[0].ravel()
    ht = np.histogramdd(zt, bins=edges)[0].ravel()
    ids = np.arange(hs.size)
    return js_distance(DiscreteDistribution.from_arrays(ids, hs / hs.sum()), DiscreteDistribution.from_arrays(ids, ht / ht.sum()))


def _evaluate(p: NetParams, epoch: int, src_train, src_test, tgt_test, djs_y: float) -> EpochRecord:
    _, _, z_tr = features(p, src_train.x)
    src_err = float(np.mean((class_logit(p, z_tr) > 0) != (src_train.y > 0.5)))
    _, _, zs = features(p, src_test.x)
    _, _, zt = features(p, tgt_test.x)
    err_s = float(np.mean((class_logit(p, zs) > 0) != (src_test.y > 0.5)))
    err_t = float(np.mean((class_logit(p, zt) > 0) != (tgt_test.y > 0.5)))
    ds = disc_forward(p, zs)[2] > 0
    dt = disc_forward(p, zt)[2] > 0
    disc_acc = float((ds.sum() + (~dt).sum()) / (len(ds) + len(dt)))
    djs_z = histogram_js(zs, zt)
    return EpochRecord(
        epoch=epoch,
        source_err=src_err,
        target_acc=1.0 - err_t,
        disc_acc=disc_acc,
        djs_z=djs_z,
        djs_y=djs_y,
        lower_bound=joint_error_lower_bound(djs_y, djs_z),
        joint_err=err_s + err_t,
    )


def train(spec: SyntheticDomainSpec, hyper: Hyper = Hyper()) -> Trajectory:
    """Minibatch SGD; one record before training and one after each epoch."""
    src, tgt, tgt_test = make_domains(spec)
    src_test = source_holdout(spec)
    p = NetParams.init(hyper.hidden, hyper.bottleneck, spec.seed)
    rs, rt = _rng(spec.seed, _SRC_BATCH), _rng(spec.seed, _TGT_BATCH)
    disc_lr = hyper.lr if hyper.disc_lr is None else hyper.disc_lr
    djs_y = spec.djs_y
    # epoch 0 records the untrained network so the initial rise is visible
    records = [_evaluate(p, 0, src, src_test, tgt_test, djs_y)]
    for epoch in range(1, hyper.epochs + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            _train_epoch(p, hyper, hyper.grl_at(epoch - 1), disc_lr, src, tgt, rs, rt)
        with np.errstate(over="ignore", invalid="ignore"):
            lc, ld = losses(p, Batch(src.x, src.y, tgt.x))
        if not (math.isfinite(lc) and math.isfinite(ld)) or not p.finite():
            raise DivergedTraining(epoch, "loss became non-finite")
        records.append(_evaluate(p, epoch, src, src_test, tgt_test, djs_y))
    return Trajectory(tuple(records))


def _train_epoch(p: NetParams, hyper: Hyper, lam: float, disc_lr: float, src, tgt, rs, rt) -> None:
    """One pass over the source sample in minibatches, paired with target minibatches."""
    n = len(src)
    order_s = rs.permutation(n)
    order_t = rt.permutation(len(tgt))
    for start in range(0, n, hyper.batch):
        bs = order_s[start : start + hyper.batch]
        bt = order_t[start : start + hyper.batch]
        batch = Batch(src.x[bs], src.y[bs], tgt.x[bt])
        if hyper.adversarial:
            g = backward(p, batch, lam)
        else:
            parts = gradient_parts(p, batch)
            g = dict(parts["classifier"])
            g.update({k: parts["feat_cls"][k] for k in FEATURIZER})
        for k, v in g.items():
            step = disc_lr if k in DISCRIMINATOR else hyper.lr
            arr = getattr(p, k)
            arr -= step * v


# ---------------------------------------------------------------------------
# trajectory analysis
# ---------------------------------------------------------------------------


def least_squares_slope(traj, field: str, from_epoch: int = 0, to_epoch: Optional[int] = None) -> float:
    """OLS slope of ``field`` against epoch over epochs in [from_epoch, to_epoch]."""
    if isinstance(traj, Trajectory):
        x, y = traj.epochs, traj.column(field)
    else:
        pts = np.asarray(traj, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
    keep = x >= from_epoch
    if to_epoch is not None:
        keep &= x <= to_epoch
    x, y = x[keep], y[keep]
    if x.size < 3:
        raise InsufficientPoints(f"need at least 3 points, got {x.size}")
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def peak_epoch(traj: Trajectory, field: str = "target_acc", smooth: int = 5, min_tail: int = 20) -> int:
    """Epoch of the maximum of a centered moving average, leaving at least ``min_tail`` epochs after it."""
    y = traj.column(field)
    k = max(1, min(smooth, y.size))
    pad = np.pad(y, (k // 2, k - 1 - k // 2), mode="edge")
    s = np.convolve(pad, np.ones(k) / k, mode="valid")
    last = max(1, y.size - min_tail)
    return int(traj.epochs[int(np.argmax(s[:last]))])


def post_peak_slope(traj: Trajectory, field: str = "target_acc", smooth: int = 5, min_tail: int = 20) -> float:
    return least_squares_slope(traj, field, from_epoch=peak_epoch(traj, field, smooth, min_tail))


def rise_then_fall(traj: Trajectory, field: str = "target_acc") -> bool:
    """Peak above the starting value, followed by a negative least-squares slope."""
    peak = peak_epoch(traj, field)
    y = traj.column(field)
    return bool(y[traj.epochs == peak][0] > y[0] and post_peak_slope(traj, field) < 0)


def summary(traj: Trajectory) -> dict:
    peak = peak_epoch(traj)
    acc = traj.column("target_acc")
    return {
        "initial_target_acc": float(acc[0]),
        "rise_then_fall": rise_then_fall(traj),
        "epochs": len(traj.records),
        "peak_epoch": peak,
        "peak_target_acc": float(acc[traj.epochs == peak][0]),
        "final_target_acc": float(acc[-1]),
        "post_peak_slope": post_peak_slope(traj),
        "lower_bound_consistent": traj.consistency_holds(),
        "djs_y": float(traj.records[0].djs_y),
        "final_djs_z": float(traj.records[-1].djs_z),
    }


def spec_to_dict(spec: SyntheticDomainSpec) -> dict:
    d = asdict(spec)
    d["class_means"] = [[list(p) for p in dm] for dm in spec.class_means]
    d["label_prob"] = list(spec.label_prob)
    return d


def with_seed(spec: SyntheticDomainSpec, seed: int) -> SyntheticDomainSpec:
    return replace(spec, seed=seed)
