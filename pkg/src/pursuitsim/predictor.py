"""Evader-trajectory prediction.

The environment logs one record per tick: all pursuer positions, the true
evader position and velocity, and whether the team detected the evader.
Prediction consumes the *masked* view of an n-tick window (undetected evader
entries replaced by the marker value) and emits the next K evader positions.

Three non-neural predictors share the interface a learned model would use:
an oracle that forward-simulates the known evader force model with pursuers
frozen, a constant-velocity extrapolator, and an affine map fit by ridge
least squares on sliding-window training pairs.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass
class TickRecord:
    tick: int
    pursuers: np.ndarray  # (n, 3)
    evader_p: np.ndarray  # (3,) true position
    evader_v: np.ndarray  # (3,) true per-tick velocity
    detected: bool


class HistoryWindow:
    """Up to n consecutive tick records (oldest first)."""

    def __init__(self, records):
        if not records:
            raise ValueError("empty history window")
        for a, b in zip(records, records[1:]):
            if b.tick != a.tick + 1:
                raise ValueError("window ticks must be consecutive")
        self.records = list(records)

    def __len__(self):
        return len(self.records)

    def last(self):
        return self.records[-1]

    def last_detected(self):
        for rec in reversed(self.records):
            if rec.detected:
                return rec
        return None

    def padded(self, n):
        """Front-pad to exactly n records by repeating the oldest one."""
        if len(self.records) >= n:
            return HistoryWindow(self.records[-n:])
        pad = [self.records[0]] * (n - len(self.records))
        win = HistoryWindow.__new__(HistoryWindow)
        win.records = pad + self.records
        return win

    def features(self, mask_value, max_steps):
        """Flattened masked feature vector, tick index normalized to [0, 1]."""
        out = []
        for rec in self.records:
            out.extend(rec.pursuers.reshape(-1))
            if rec.detected:
                out.extend(rec.evader_p)
                out.extend(rec.evader_v)
            else:
                out.extend([mask_value] * 6)
            out.append(rec.tick / max_steps)
        return np.asarray(out, dtype=np.float64)


@dataclass
class TrainingPair:
    """Masked input window X and the K following true evader positions Y."""

    X: HistoryWindow
    Y: np.ndarray  # (K, 3)


def collect_windows(log, n, horizon):
    """Sliding-window training pairs from one episode log.

    Emits one pair per start index; ``len(log) - (n + horizon) + 1`` pairs,
    or none when the trajectory is too short.
    """
    total = n + horizon
    pairs = []
    for s in range(len(log) - total + 1):
        window = HistoryWindow(log[s:s + n])
        y = np.stack([log[s + n + j].evader_p for j in range(horizon)])
        pairs.append(TrainingPair(window, y))
    return pairs


# ---------------------------------------------------------------------------
# predictors
# ---------------------------------------------------------------------------

class ConstantVelocityPredictor:
    """Extrapolates the last observed evader velocity."""

    def __init__(self, cfg):
        self.cfg = cfg

    def predict(self, window):
        cfg = self.cfg
        horizon = cfg.prediction_horizon
        rec = window.last_detected()
        if rec is None:
            center = np.array([0.0, 0.0, cfg.arena_height / 2.0])
            return np.tile(center, (horizon, 1)), True
        lag = window.last().tick - rec.tick
        ex, ey, ez = rec.evader_p
        sx = rec.evader_v[0] * cfg.dt_control
        sy = rec.evader_v[1] * cfg.dt_control
        sz = rec.evader_v[2] * cfg.dt_control
        out = np.empty((horizon, 3))
        for j in range(horizon):
            k = float(lag + 1 + j)
            out[j, 0] = ex + sx * k
            out[j, 1] = ey + sy * k
            out[j, 2] = ez + sz * k
        return out, False


class OraclePredictor:
    """Forward-simulates the known evader model, pursuers held frozen.

    Uses the same kernel as the environment, so on episodes where the
    pursuers genuinely do not move its rollout reproduces the environment
    exactly.
    """

    def __init__(self, cfg, evader_cfg):
        self.cfg = cfg
        self.evader_cfg = evader_cfg
        self._obstacles = np.zeros(0)
        self._n_obs = 0

    def bind_task(self, obstacles):
        obstacles = np.asarray(obstacles, dtype=np.float64).reshape(-1, 2)
        self._obstacles = np.ascontiguousarray(obstacles.reshape(-1))
        self._n_obs = obstacles.shape[0]

    def predict(self, window):
        cfg = self.cfg
        ecfg = self.evader_cfg
        horizon = cfg.prediction_horizon
        if window.last_detected() is None:
            center = np.array([0.0, 0.0, cfg.arena_height / 2.0])
            return np.tile(center, (horizon, 1)), True
        rec = window.last()
        e = rec.evader_p.copy()
        vnorm = float(np.linalg.norm(rec.evader_v))
        heading = rec.evader_v / vnorm if vnorm > 1e-12 else np.zeros(3)
        pursuers = np.ascontiguousarray(rec.pursuers.reshape(-1))
        n = rec.pursuers.shape[0]
        force = np.empty(3)
        out = np.empty((horizon, 3))
        for j in range(horizon):
            kernels.evader_tick(
                e, heading, pursuers, n, self._obstacles, self._n_obs,
                cfg.obstacle_radius, cfg.arena_radius, cfg.arena_height,
                ecfg.w_pursuer, ecfg.w_obstacle, ecfg.w_boundary,
                ecfg.eps_dist, ecfg.speed, cfg.dt_control,
                1 if ecfg.fixed_altitude else 0, force)
            out[j] = e
        return out, False


class LinearPredictor:
    """Affine map from flattened masked windows to the next K positions."""

    def __init__(self, cfg, weights, intercept):
        self.cfg = cfg
        self.weights = np.asarray(weights, dtype=np.float64)
        self.intercept = np.asarray(intercept, dtype=np.float64)

    def predict(self, window):
        cfg = self.cfg
        x = window.padded(cfg.history_length).features(cfg.mask_value,
                                                       cfg.max_steps)
        y = x @ self.weights + self.intercept
        return y.reshape(cfg.prediction_horizon, 3), False


def fit_linear(pairs, cfg, ridge=1e-8):
    """Least squares via normal equations with ridge damping.

    Returns (LinearPredictor, diagnostics) where diagnostics carries the
    achieved mean-squared loss.
    """
    if not pairs:
        raise ValueError("need at least one training pair")
    xs = np.stack([p.X.padded(cfg.history_length).features(
        cfg.mask_value, cfg.max_steps) for p in pairs])
    ys = np.stack([p.Y.reshape(-1) for p in pairs])
    n, d = xs.shape
    xa = np.hstack([xs, np.ones((n, 1))])
    a = xa.T @ xa + ridge * np.eye(d + 1)
    theta = np.linalg.solve(a, xa.T @ ys)
    pred = xa @ theta
    loss = float(np.mean((ys - pred) ** 2))
    predictor = LinearPredictor(cfg, theta[:-1], theta[-1])
    diagnostics = {"loss": loss, "n_pairs": n, "n_features": d,
                   "ridge": ridge}
    return predictor, diagnostics


def prediction_error(predictor, episodes, cfg):
    """Mean L2 error of the first predicted position vs the true next one."""
    errs = []
    n = cfg.history_length
    for log in episodes:
        for t in range(len(log) - 1):
            window = HistoryWindow(log[max(0, t + 1 - n):t + 1])
            pred, _ = predictor.predict(window)
            errs.append(float(np.linalg.norm(pred[0] - log[t + 1].evader_p)))
    return float(np.mean(errs)) if errs else 0.0


# ---------------------------------------------------------------------------
# JSONL import/export of training pairs
# ---------------------------------------------------------------------------
# One pair per line:
#   {"ticks": [...], "pursuers": [n_ticks x n x 3], "evader_p": [n_ticks x 3],
#    "evader_v": [n_ticks x 3], "detected": [...], "y": [K x 3]}
# evader_p / evader_v hold the masked view (marker value when undetected).

def export_pairs(pairs, path, mask_value=-5.0):
    with open(path, "w") as fh:
        for p in pairs:
            recs = p.X.records
            mask = [mask_value] * 3
            row = {
                "ticks": [r.tick for r in recs],
                "pursuers": [r.pursuers.tolist() for r in recs],
                "evader_p": [r.evader_p.tolist() if r.detected else mask
                             for r in recs],
                "evader_v": [r.evader_v.tolist() if r.detected else mask
                             for r in recs],
                "detected": [bool(r.detected) for r in recs],
                "y": p.Y.tolist(),
            }
            fh.write(json.dumps(row) + "\n")


def import_pairs(path):
    pairs = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            records = [
                TickRecord(tick=int(t), pursuers=np.asarray(pu),
                           evader_p=np.asarray(ep), evader_v=np.asarray(ev),
                           detected=bool(dt))
                for t, pu, ep, ev, dt in zip(
                    row["ticks"], row["pursuers"], row["evader_p"],
                    row["evader_v"], row["detected"])
            ]
            pairs.append(TrainingPair(HistoryWindow(records),
                                      np.asarray(row["y"])))
    return pairs
