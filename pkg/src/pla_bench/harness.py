"""Declarative Monte Carlo experiment engine.

An ExperimentConfig sweeps scenario parameters, trains or calibrates one
defender per sweep point and dataset, classifies phase-II packet streams
from the legitimate transmitter and the attacker, and aggregates
confusion counts into a ResultTable. Everything is deterministic given
the seed: each (sweep point, dataset) shard derives its own generator
stream, and reduction happens in sorted shard order, so results are
byte-identical no matter how many workers run.

The ``reproduce`` entry point maps named targets (table1..table5,
fig1..fig10) onto canned configurations at desk scale.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import csv
import io
import itertools
import json
import math
import time

import numpy as np

from .attacks import AttackStrategy, optimize_attack_exponents
from .channel import (
    ScenarioParams,
    alice_estimate_phase2,
    bob_estimate_phase1,
    complex_gaussian,
    eve_observations,
    forged_observation,
    sample_channel,
)
from .errors import ConfigError, UndefinedMetricError
from .metrics import ConfusionMatrix, binomial_se
from .mlauth import (
    CvConfig,
    DistanceMetric,
    binary_knn,
    binary_knn_tune,
    binary_svm_classify,
    binary_svm_train,
    featurize,
    kmeans_label,
    median_heuristic,
    ocnn_classify,
    ocnn_train,
    ocsvm_classify,
    ocsvm_train_cv,
)
from .rng import Rng
from .statdec import (
    calibrate_threshold,
    ncx2_inv,
    normal_upper_quantile,
    optimize_thresholds,
    per_dim_variance,
)

DEFENDER_KINDS = (
    "llr", "combined", "ideal", "ocnn", "ocsvm",
    "binary_knn", "binary_svm", "kmeans_svm",
)

STAT_DEFENDERS = ("llr", "combined", "ideal")


@dataclass(frozen=True)
class DefenderSpec:
    kind: str
    variant: str = "1KNN"          # one-class NN flavor
    metric: str = "euclidean"      # "euclidean" or "llr"
    kernel: str = "gaussian"       # "gaussian", "linear" or "poly"
    ideal_sigma2: float | None = None
    ideal_sigma2_E: float | None = None

    def __post_init__(self):
        if self.kind not in DEFENDER_KINDS:
            raise ConfigError(f"unknown defender kind {self.kind!r}")
        if self.metric not in ("euclidean", "llr"):
            raise ConfigError(f"unknown defender metric {self.metric!r}")

    def label(self) -> str:
        if self.kind == "ocnn":
            suffix = "-llr" if self.metric == "llr" else ""
            return f"ocnn-{self.variant}{suffix}"
        if self.kind == "ocsvm" and self.kernel != "gaussian":
            return f"ocsvm-{self.kernel}"
        return self.kind


@dataclass(frozen=True)
class AttackerSpec:
    strategy: AttackStrategy = AttackStrategy("simplified")
    averaged: bool = False  # average the adversary's M observation pairs first

    def label(self) -> str:
        s = self.strategy
        name = s.kind if s.kind != "exponent" else f"exponent({s.x:g},{s.y:g})"
        return name + ("-avg" if self.averaged else "")


_SWEEP_FIELDS = (
    "n_subcarriers", "alpha_I", "alpha_II", "rho_AE", "rho_EB",
    "snr_I_db", "snr_II_db", "m_training",
)


@dataclass(frozen=True)
class ExperimentConfig:
    defender: DefenderSpec
    attacker: AttackerSpec = AttackerSpec()
    n_subcarriers: tuple = (1,)
    alpha_I: tuple = (1.0,)
    alpha_II: tuple = (1.0,)
    rho_AE: tuple = (0.1,)
    rho_EB: tuple = (0.0,)
    snr_I_db: tuple = (15.0,)
    snr_II_db: tuple = (20.0,)
    m_training: tuple = (1000,)
    target_pfa: float | tuple | None = None
    n_trials: int = 40_000
    n_datasets: int = 20
    seed: int = 0
    calibration_trials: int = 200_000
    workers: int | None = None
    record_timing: bool = False

    def __post_init__(self):
        for name in _SWEEP_FIELDS:
            v = getattr(self, name)
            if not isinstance(v, (tuple, list)) or len(v) == 0:
                raise ConfigError(f"{name} must be a nonempty list")
            object.__setattr__(self, name, tuple(v))
        if self.n_trials < 1_000:
            raise ConfigError("n_trials must be at least 1000")
        if self.n_datasets < 1:
            raise ConfigError("n_datasets must be at least 1")
        if self.defender.kind in STAT_DEFENDERS and self.target_pfa is None:
            raise ConfigError(f"defender {self.defender.kind!r} requires target_pfa")
        if isinstance(self.target_pfa, (tuple, list)):
            if len(self.target_pfa) != len(self.n_subcarriers):
                raise ConfigError("per-N target_pfa must align with n_subcarriers")
            object.__setattr__(self, "target_pfa", tuple(float(t) for t in self.target_pfa))

    def sweep_points(self):
        """Cartesian product over the sweep lists, in declaration order."""
        lists = [getattr(self, name) for name in _SWEEP_FIELDS]
        for combo in itertools.product(*lists):
            yield dict(zip(_SWEEP_FIELDS, combo))

    def target_for(self, point: dict) -> float | None:
        if self.target_pfa is None or isinstance(self.target_pfa, float):
            return self.target_pfa
        idx = self.n_subcarriers.index(point["n_subcarriers"])
        return self.target_pfa[idx]


def _scenario_for(point: dict) -> ScenarioParams:
    return ScenarioParams.from_snr(
        n_subcarriers=point["n_subcarriers"],
        snr_I_db=point["snr_I_db"],
        snr_II_db=point["snr_II_db"],
        alpha_I=point["alpha_I"],
        alpha_II=point["alpha_II"],
        rho_AE=point["rho_AE"],
        rho_EB=point["rho_EB"],
        m_training=point["m_training"],
    )


def _eve_stream(g, scn: ScenarioParams, rng: Rng, n: int) -> np.ndarray:
    """Phase-II arrivals of forged packets.

    The forged vector keeps its mean but collects the same fading
    innovation variance as any packet crossing the epoch boundary, which
    is what makes the closed-form error rates exact for every alpha_II.
    """
    fade = complex_gaussian(rng, (n, scn.n_subcarriers), scn.power_delay)
    noise = complex_gaussian(rng, (n, scn.n_subcarriers), scn.sigma2_II)
    return g + np.sqrt(1.0 - scn.alpha_II**2) * fade + noise


def _forge_batch(scn: ScenarioParams, attacker: AttackerSpec, rng: Rng, n: int,
                 h: np.ndarray) -> np.ndarray:
    """Forged vectors for n packets.

    ``h`` is either one channel vector (shared by all packets, the trained
    defenders' setting) or one row per packet (fresh universe per trial).
    When the adversary averages her m_training observation pairs, the mean
    is drawn directly with variances scaled by 1/m, which is an exact
    sampling of the average because everything is Gaussian and the two
    links share each draw's innovation.
    """
    h = np.asarray(h, dtype=complex)
    per_row = h.ndim > 1
    if attacker.averaged:
        m = scn.m_training
        shape = h.shape if per_row else (1, scn.n_subcarriers)
        r = complex_gaussian(rng, shape, scn.power_delay / m)
        w_ae = complex_gaussian(rng, shape, scn.sigma2_AE / m)
        w_eb = complex_gaussian(rng, shape, scn.sigma2_EB / m)
        h_ae = scn.rho_AE * h + np.sqrt(1.0 - scn.rho_AE**2) * r + w_ae
        h_eb = scn.rho_EB * h + np.sqrt(1.0 - scn.rho_EB**2) * r + w_eb
        g = attacker.strategy.forge(h_ae, h_eb, scn)
        return g if per_row else np.repeat(g, n, axis=0)
    h_ae, h_eb = eve_observations(h, scn, rng, size=None if per_row else n)
    return attacker.strategy.forge(h_ae, h_eb, scn)


def _reference_batch(scn: ScenarioParams, rng: Rng, h: np.ndarray) -> np.ndarray:
    """One enrollment reference per row of h (full single-shot variance)."""
    fade = complex_gaussian(rng, h.shape, scn.power_delay)
    noise = complex_gaussian(rng, h.shape, scn.sigma2_I)
    return scn.alpha_I * h + np.sqrt(1.0 - scn.alpha_I**2) * fade + noise


def _ideal_psi(scn: ScenarioParams, attacker: AttackerSpec, rng: Rng, n: int,
               s_b: float, s_e: float) -> tuple[np.ndarray, np.ndarray]:
    """Genuine- and forged-packet statistics of the two-reference test.

    Every trial is a fresh universe: the verifier holds an enrollment
    reference of the genuine channel and one of the adversary's forgery,
    and scores phase-II packets against both.
    """
    nsub = scn.n_subcarriers
    h = sample_channel(scn, rng, size=n)
    ref = _reference_batch(scn, rng, h)
    g0 = _forge_batch(scn, attacker, rng, n, h)
    eve_ref = g0 + complex_gaussian(rng, (n, nsub), scn.sigma2_I)
    alice = alice_estimate_phase2(h, scn, rng)
    g = _forge_batch(scn, attacker, rng, n, h)
    eve = _eve_stream(g, scn, rng, n)
    const = nsub * math.log(math.sqrt(s_b) / math.sqrt(s_e))
    psi_a = (const + np.sum(np.abs(alice - ref) ** 2, axis=-1) / (2.0 * s_b)
             - np.sum(np.abs(alice - eve_ref) ** 2, axis=-1) / (2.0 * s_e))
    psi_e = (const + np.sum(np.abs(eve - ref) ** 2, axis=-1) / (2.0 * s_b)
             - np.sum(np.abs(eve - eve_ref) ** 2, axis=-1) / (2.0 * s_e))
    return psi_a, psi_e


# --------------------------------------------------------------------------
# shard execution

def _combined_calibration(scn, target, calib_trials, attacker, rng):
    """Scenario-level (theta, epsilon) for the combined defender.

    Falls back to an analytic split of the target between the two
    conditions when the Monte Carlo budget cannot resolve it.
    """
    if target * calib_trials >= 100:
        thr = optimize_thresholds(
            scn, target, calib_trials, rng,
            attack=lambda ae, eb, p: attacker.strategy.forge(ae, eb, p),
        )
        return thr.theta, thr.epsilon
    dof = 2 * scn.n_subcarriers
    s2 = per_dim_variance(scn)
    mu_nom = float(np.sum((2.0 / s2) * (scn.alpha_II - scn.alpha_I) ** 2 * scn.power_delay))
    theta = ncx2_inv(1.0 - target / 2.0, dof, mu_nom)
    n_probe = 100_000
    h = sample_channel(scn, rng, size=n_probe)
    ref = scn.alpha_I * h + np.sqrt(1.0 - scn.alpha_I**2) * sample_channel(scn, rng, size=n_probe) \
        + complex_gaussian(rng, (n_probe, scn.n_subcarriers), scn.sigma2_I)
    ali = scn.alpha_II * h + np.sqrt(1.0 - scn.alpha_II**2) * sample_channel(scn, rng, size=n_probe) \
        + complex_gaussian(rng, (n_probe, scn.n_subcarriers), scn.sigma2_II)
    gam = np.sum(np.abs(ref) - np.abs(ali), axis=-1)
    eps = float(np.std(gam)) * normal_upper_quantile(target / 4.0)
    return theta, eps


def _run_shard(payload: dict) -> dict:
    """One (sweep point, dataset) cell; pure function of its payload.

    Statistical defenders have no per-dataset trained state, so their
    trials each draw a fresh channel, reference and packet (the closed
    forms describe exactly that average). Learned defenders train one
    model per dataset on a fixed channel and classify packets over it.
    """
    point = payload["point"]
    defender: DefenderSpec = payload["defender"]
    attacker: AttackerSpec = payload["attacker"]
    target = payload["target"]
    n_eval = payload["n_eval"]
    rng = Rng(payload["seed"]).derive(payload["point_idx"], payload["dataset_idx"])
    scn = _scenario_for(point)
    n = scn.n_subcarriers

    trained: dict = {}
    t0 = time.perf_counter()

    kind = defender.kind
    if kind in STAT_DEFENDERS:
        s2 = per_dim_variance(scn)
        if kind == "llr":
            mu_nom = float(np.sum((2.0 / s2) * (scn.alpha_II - scn.alpha_I) ** 2
                                  * scn.power_delay))
            theta = ncx2_inv(1.0 - target, 2 * n, mu_nom)
            trained["theta"] = theta
        elif kind == "combined":
            theta, eps = payload["combined_thresholds"]
            trained["theta"], trained["epsilon"] = theta, eps
        else:
            s_b = defender.ideal_sigma2 or (scn.sigma2_I + scn.sigma2_II)
            s_e = defender.ideal_sigma2_E or (scn.sigma2_I + scn.sigma2_II)
            psi_cal, _ = _ideal_psi(scn, attacker, rng.derive(5),
                                    payload["ideal_calibration"], s_b, s_e)
            theta_bar = calibrate_threshold(psi_cal, target)
            trained["theta"] = theta_bar
        train_seconds = time.perf_counter() - t0

        r_eval = rng.derive(9)
        if kind == "ideal":
            psi_a, psi_e = _ideal_psi(scn, attacker, r_eval, n_eval, s_b, s_e)
            acc_a = psi_a <= trained["theta"]
            acc_e = psi_e <= trained["theta"]
        else:
            h = sample_channel(scn, r_eval, size=n_eval)
            ref = _reference_batch(scn, r_eval, h)
            alice = alice_estimate_phase2(h, scn, r_eval)
            g_ev = _forge_batch(scn, attacker, r_eval, n_eval, h)
            eve = _eve_stream(g_ev, scn, r_eval, n_eval)
            psi_a = 2.0 * np.sum(np.abs(alice - ref) ** 2 / s2, axis=-1)
            psi_e = 2.0 * np.sum(np.abs(eve - ref) ** 2 / s2, axis=-1)
            acc_a = psi_a <= trained["theta"]
            acc_e = psi_e <= trained["theta"]
            if kind == "combined":
                gam_a = np.sum(np.abs(ref) - np.abs(alice), axis=-1)
                gam_e = np.sum(np.abs(ref) - np.abs(eve), axis=-1)
                acc_a &= np.abs(gam_a) <= trained["epsilon"]
                acc_e &= np.abs(gam_e) <= trained["epsilon"]
        cm = ConfusionMatrix(
            tp=int(np.sum(acc_a)), fn=int(n_eval - np.sum(acc_a)),
            fp=int(np.sum(acc_e)), tn=int(n_eval - np.sum(acc_e)),
        )
        return {
            "point_idx": payload["point_idx"],
            "dataset_idx": payload["dataset_idx"],
            "tp": cm.tp, "fn": cm.fn, "fp": cm.fp, "tn": cm.tn,
            "trained": trained,
            "train_seconds": train_seconds,
        }

    # learned defenders: one model per dataset on a fixed channel
    h = sample_channel(scn, rng.derive(0))
    train_pos = bob_estimate_phase1(h, scn, scn.alpha_I, rng.derive(1), size=scn.m_training)
    if kind in ("ocnn", "ocsvm"):
        g_neg = _forge_batch(scn, attacker, rng.derive(2), scn.m_training, h)
        negatives = featurize(_eve_stream(g_neg, scn, rng.derive(2), scn.m_training))
        cv = CvConfig(negatives=negatives)
        metric = (DistanceMetric("llr", per_dim_variance(scn))
                  if defender.metric == "llr" else DistanceMetric("euclidean"))
        if kind == "ocnn":
            model = ocnn_train(featurize(train_pos), defender.variant, metric, cv, rng.derive(3))
            trained.update(j=model.j, k=model.k, theta_d=model.theta_d)
        else:
            model, nu, sig = ocsvm_train_cv(
                featurize(train_pos), cv, rng.derive(3), kernel=defender.kernel)
            trained.update(nu=nu, sigma_svm=sig)
    else:
        m_half = scn.m_training // 2
        pos = featurize(train_pos[:m_half])
        g_tr = _forge_batch(scn, attacker, rng.derive(2), m_half, h)
        neg = featurize(forged_observation(g_tr, scn, rng.derive(2), phase="I"))
        x_tr = np.vstack([pos, neg])
        y_tr = np.concatenate([np.ones(m_half, dtype=int), np.zeros(m_half, dtype=int)])
        if kind == "binary_knn":
            k_sel = binary_knn_tune(x_tr, y_tr, rng.derive(3))
            trained["knn_k"] = k_sel
        else:
            if kind == "kmeans_svm":
                order = rng.derive(3).permutation(x_tr.shape[0])
                x_mix, y_true = x_tr[order], y_tr[order]
                km = kmeans_label(x_mix, 2, 50, rng.derive(4))
                # evaluation-side cluster-to-class assignment by majority
                match0 = np.mean(y_true[km.labels == 0]) if (km.labels == 0).any() else 0.0
                match1 = np.mean(y_true[km.labels == 1]) if (km.labels == 1).any() else 0.0
                alice_cluster = 0 if match0 >= match1 else 1
                x_tr = x_mix
                y_tr = (km.labels == alice_cluster).astype(int)
                if y_tr.all() or not y_tr.any():
                    # clustering collapsed; fall back to a coin-split
                    y_tr = (np.arange(x_tr.shape[0]) % 2).astype(int)
            sig = median_heuristic(x_tr)
            svm = binary_svm_train(x_tr, y_tr, c=1.0, sigma_svm=sig, kernel=defender.kernel)
            trained["svm_c"], trained["sigma_svm"] = 1.0, sig

    train_seconds = time.perf_counter() - t0

    r_eval = rng.derive(9)
    alice = alice_estimate_phase2(h, scn, r_eval, size=n_eval)
    g_ev = _forge_batch(scn, attacker, r_eval, n_eval, h)
    eve = _eve_stream(g_ev, scn, r_eval, n_eval)

    if kind == "ocnn":
        acc_a = ocnn_classify(model, featurize(alice))
        acc_e = ocnn_classify(model, featurize(eve))
    elif kind == "ocsvm":
        acc_a = ocsvm_classify(model, featurize(alice))
        acc_e = ocsvm_classify(model, featurize(eve))
    elif kind == "binary_knn":
        acc_a = np.asarray(binary_knn(x_tr, y_tr, k_sel, featurize(alice))) == 1
        acc_e = np.asarray(binary_knn(x_tr, y_tr, k_sel, featurize(eve))) == 1
    else:
        acc_a = np.asarray(binary_svm_classify(svm, featurize(alice))) == 1
        acc_e = np.asarray(binary_svm_classify(svm, featurize(eve))) == 1

    cm = ConfusionMatrix(
        tp=int(np.sum(acc_a)), fn=int(n_eval - np.sum(acc_a)),
        fp=int(np.sum(acc_e)), tn=int(n_eval - np.sum(acc_e)),
    )
    return {
        "point_idx": payload["point_idx"],
        "dataset_idx": payload["dataset_idx"],
        "tp": cm.tp, "fn": cm.fn, "fp": cm.fp, "tn": cm.tn,
        "trained": trained,
        "train_seconds": train_seconds,
    }


# --------------------------------------------------------------------------
# result table

_BASE_COLUMNS = [
    "n_subcarriers", "alpha_I", "alpha_II", "rho_AE", "rho_EB",
    "snr_I_db", "snr_II_db", "m_training", "defender", "attacker",
    "target_pfa", "n_datasets", "n_alice", "n_eve",
    "tp", "fn", "fp", "tn",
    "p_fa", "p_md", "accuracy", "g_mean", "se_pfa", "se_pmd",
    "p_fa_note", "p_md_note",
    "theta", "epsilon", "j", "k", "theta_d", "nu", "sigma_svm",
    "knn_k", "svm_c", "x", "y",
]


@dataclass
class ResultTable:
    columns: list
    rows: list  # list of dicts keyed by column
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [row.get(name) for row in self.rows]

    def find(self, **kv) -> list:
        out = []
        for row in self.rows:
            if all(row.get(k) == v for k, v in kv.items()):
                out.append(row)
        return out


def _dataset_se(per_dataset: list, pooled_p: float, n_total: int) -> float:
    """Standard error of the pooled rate; dataset-level spread dominates."""
    if len(per_dataset) >= 2:
        arr = np.asarray(per_dataset, dtype=float)
        se = float(arr.std(ddof=1) / math.sqrt(arr.size))
        return max(se, binomial_se(pooled_p, n_total))
    return binomial_se(pooled_p, n_total)


def _median_or_none(values: list):
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    med = float(np.median(np.asarray(vals, dtype=float)))
    return med


def run_experiment(config: ExperimentConfig) -> ResultTable:
    """Execute the full sweep and aggregate per-point confusion counts."""
    points = list(config.sweep_points())
    n_eval = max(1, math.ceil(config.n_trials / config.n_datasets))

    payloads = []
    for p_idx, point in enumerate(points):
        target = config.target_for(point)
        combined_thresholds = None
        if config.defender.kind == "combined":
            scn = _scenario_for(point)
            combined_thresholds = _combined_calibration(
                scn, target, config.calibration_trials, config.attacker,
                Rng(config.seed).derive(p_idx, 1_000_000),
            )
        ideal_cal = min(max(int(100.0 / target), 2_000), 400_000) if (
            config.defender.kind == "ideal" and target) else 0
        for d_idx in range(config.n_datasets):
            payloads.append({
                "point_idx": p_idx, "dataset_idx": d_idx, "point": point,
                "defender": config.defender, "attacker": config.attacker,
                "target": target, "n_eval": n_eval, "seed": config.seed,
                "combined_thresholds": combined_thresholds,
                "ideal_calibration": ideal_cal,
            })

    if config.workers and config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            shard_results = list(pool.map(_run_shard, payloads, chunksize=1))
    else:
        shard_results = [_run_shard(p) for p in payloads]
    shard_results.sort(key=lambda r: (r["point_idx"], r["dataset_idx"]))

    columns = list(_BASE_COLUMNS)
    if config.record_timing:
        columns.append("train_seconds")
    rows = []
    for p_idx, point in enumerate(points):
        shards = [r for r in shard_results if r["point_idx"] == p_idx]
        cm = ConfusionMatrix()
        for r in shards:
            cm = cm + ConfusionMatrix(tp=r["tp"], fn=r["fn"], fp=r["fp"], tn=r["tn"])
        n_alice = cm.tp + cm.fn
        n_eve = cm.fp + cm.tn
        pfa = cm.fn / n_alice
        pmd = cm.fp / n_eve
        per_fa = [r["fn"] / (r["fn"] + r["tp"]) for r in shards]
        per_md = [r["fp"] / (r["fp"] + r["tn"]) for r in shards]
        row = dict(point)
        row.update({
            "defender": config.defender.label(),
            "attacker": config.attacker.label(),
            "target_pfa": config.target_for(point),
            "n_datasets": config.n_datasets,
            "n_alice": n_alice, "n_eve": n_eve,
            "tp": cm.tp, "fn": cm.fn, "fp": cm.fp, "tn": cm.tn,
            "p_fa": pfa, "p_md": pmd,
            "accuracy": (cm.tp + cm.tn) / cm.total,
            "g_mean": math.sqrt((1.0 - pfa) * (1.0 - pmd)),
            "se_pfa": _dataset_se(per_fa, pfa, n_alice),
            "se_pmd": _dataset_se(per_md, pmd, n_eve),
            "p_fa_note": f"<{1.0 / n_alice:.3e}" if cm.fn == 0 else "",
            "p_md_note": f"<{1.0 / n_eve:.3e}" if cm.fp == 0 else "",
        })
        for name in ("theta", "epsilon", "theta_d", "nu", "sigma_svm", "svm_c"):
            row[name] = _median_or_none([r["trained"].get(name) for r in shards])
        for name in ("j", "k", "knn_k"):
            med = _median_or_none([r["trained"].get(name) for r in shards])
            row[name] = int(med) if med is not None else None
        row["x"] = row["y"] = None
        if config.attacker.strategy.kind == "exponent":
            row["x"], row["y"] = config.attacker.strategy.x, config.attacker.strategy.y
        if config.record_timing:
            row["train_seconds"] = float(np.mean([r["train_seconds"] for r in shards]))
        rows.append(row)
    meta = {
        "seed": config.seed,
        "n_trials": config.n_trials,
        "defender": config.defender.label(),
        "attacker": config.attacker.label(),
    }
    return ResultTable(columns=columns, rows=rows, meta=meta)


# --------------------------------------------------------------------------
# canned reproduction targets

PUBLISHED_OCC_FA = (6.76e-4, 4.21e-5, 1e-6)  # matched-FA anchors for N = 1, 2, 3


def _desk(value: float, scale: float, floor: int = 1_000) -> int:
    return max(int(round(value * scale)), floor)


def _desk_datasets(base: int, scale: float) -> int:
    return max(int(round(base * scale)), 2)


def _table_stat_ml_config(rho_ae: float, scale: float, seed: int, workers) -> list:
    base = dict(
        n_subcarriers=(1, 2, 3),
        alpha_I=(1.0,), alpha_II=(1.0,),
        rho_AE=(rho_ae,), rho_EB=(0.0,),
        snr_I_db=(15.0,), snr_II_db=(20.0,),
        m_training=(1000,),
        attacker=AttackerSpec(AttackStrategy("simplified")),
        n_trials=_desk(40_000, scale), n_datasets=_desk_datasets(20, scale),
        seed=seed, workers=workers,
    )
    configs = []
    for spec, target in (
        (DefenderSpec("llr"), PUBLISHED_OCC_FA),
        (DefenderSpec("combined"), PUBLISHED_OCC_FA),
        (DefenderSpec("ocnn", variant="1KNN"), None),
        (DefenderSpec("ocsvm"), None),
    ):
        configs.append(ExperimentConfig(defender=spec, target_pfa=target, **base))
    return configs


def _merge_tables(tables: list, meta: dict) -> ResultTable:
    columns = tables[0].columns
    rows = []
    for t in tables:
        rows.extend(t.rows)
    return ResultTable(columns=columns, rows=rows, meta=meta)


def _reproduce_table1(scale: float, seed: int, workers) -> ResultTable:
    rows = []
    n_search = _desk(20_000, scale, floor=2_000)
    calib = _desk(1_000_000, scale, floor=1_000_000)
    for n in (1, 3):
        for rho in (0.1, 0.7, 0.9):
            scn = ScenarioParams.from_snr(
                n_subcarriers=n, snr_I_db=15.0, snr_II_db=20.0,
                rho_AE=rho, rho_EB=rho, alpha_I=1.0, alpha_II=1.0,
            )
            rng = Rng(seed).derive(n, int(rho * 10))
            thr = optimize_thresholds(scn, 1e-4, calib, rng.derive(0))
            x, y, pmd = optimize_attack_exponents(
                (thr.theta, thr.epsilon), scn, 0.1, n_search, rng.derive(1))
            rows.append({
                "n_subcarriers": n, "rho": rho, "target_pfa": 1e-4,
                "theta": thr.theta, "epsilon": thr.epsilon,
                "x": x, "y": y, "p_md": pmd,
            })
    return ResultTable(
        columns=["n_subcarriers", "rho", "target_pfa", "theta", "epsilon", "x", "y", "p_md"],
        rows=rows, meta={"target": "table1", "seed": seed},
    )


def _reproduce_table2(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for rho in (0.1, 0.8):
        for m in (100, 1000):
            for variant in ("11NN", "1KNN", "J1NN", "JKNN"):
                cfg = ExperimentConfig(
                    defender=DefenderSpec("ocnn", variant=variant),
                    attacker=AttackerSpec(AttackStrategy("simplified")),
                    n_subcarriers=(3,), rho_AE=(rho,), m_training=(m,),
                    n_trials=_desk(4_000, scale), n_datasets=_desk_datasets(5, scale),
                    seed=seed, workers=workers,
                )
                tables.append(run_experiment(cfg))
            cfg = ExperimentConfig(
                defender=DefenderSpec("binary_knn"),
                attacker=AttackerSpec(AttackStrategy("simplified")),
                n_subcarriers=(3,), rho_AE=(rho,), m_training=(m,),
                n_trials=_desk(4_000, scale), n_datasets=_desk_datasets(5, scale),
                seed=seed, workers=workers,
            )
            tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "table2", "seed": seed})


def _reproduce_table3(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for kernel in ("gaussian", "poly", "linear"):
        cfg = ExperimentConfig(
            defender=DefenderSpec("ocsvm", kernel=kernel),
            attacker=AttackerSpec(AttackStrategy("simplified")),
            n_subcarriers=(1, 2, 3), rho_AE=(0.1,), m_training=(1000,),
            n_trials=_desk(40_000, scale), n_datasets=_desk_datasets(20, scale),
            seed=seed, workers=workers,
        )
        tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "table3", "seed": seed})


def _reproduce_table45(rho: float, name: str, scale: float, seed: int, workers) -> ResultTable:
    tables = [run_experiment(c) for c in _table_stat_ml_config(rho, scale, seed, workers)]
    return _merge_tables(tables, {"target": name, "seed": seed})


def _reproduce_fig1(scale: float, seed: int, workers) -> ResultTable:
    """Matched versus mismatched attacker against the combined test."""
    from .attacks import mismatched_eval
    rows = []
    n_mc = _desk(40_000, scale, floor=4_000)
    calib = _desk(400_000, scale, floor=100_000)
    for alpha2 in (1.0, 0.8):
        for n in (1, 3, 6):
            scn = ScenarioParams.from_snr(
                n_subcarriers=n, snr_I_db=15.0, snr_II_db=20.0,
                rho_AE=0.5, rho_EB=0.5, alpha_I=1.0, alpha_II=alpha2,
            )
            rng = Rng(seed).derive(n, int(alpha2 * 10))
            thr = optimize_thresholds(scn, 1e-3, calib, rng.derive(0))
            x, y, pmd_matched = optimize_attack_exponents(
                (thr.theta, thr.epsilon), scn, 0.1, n_mc, rng.derive(1))
            for label, strat in (
                ("matched", AttackStrategy("exponent", x=x, y=y)),
                ("simplified", AttackStrategy("simplified")),
                ("modulus", AttackStrategy("modulus")),
            ):
                pmd = mismatched_eval(strat, "combined", scn, n_mc, rng.derive(2),
                                      thr.theta, thr.epsilon)
                rows.append({
                    "n_subcarriers": n, "alpha_II": alpha2, "attacker": label,
                    "x": x if label == "matched" else None,
                    "y": y if label == "matched" else None,
                    "p_md": pmd,
                })
    return ResultTable(
        columns=["n_subcarriers", "alpha_II", "attacker", "x", "y", "p_md"],
        rows=rows, meta={"target": "fig1", "seed": seed},
    )


def _reproduce_fig2(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for variant in ("11NN", "1KNN", "J1NN", "JKNN"):
        cfg = ExperimentConfig(
            defender=DefenderSpec("ocnn", variant=variant),
            attacker=AttackerSpec(AttackStrategy("simplified")),
            n_subcarriers=(1, 3, 6), alpha_I=(0.8,), alpha_II=(0.9,),
            rho_AE=(0.1,), m_training=(100,),
            n_trials=_desk(4_000, scale), n_datasets=_desk_datasets(5, scale),
            seed=seed, workers=workers, record_timing=True,
        )
        tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "fig2", "seed": seed})


def _reproduce_fig3(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for variant in ("11NN", "1KNN", "J1NN", "JKNN"):
        cfg = ExperimentConfig(
            defender=DefenderSpec("ocnn", variant=variant),
            attacker=AttackerSpec(AttackStrategy("simplified")),
            n_subcarriers=(3,), rho_AE=(0.1, 0.4, 0.8),
            m_training=(1000,), n_trials=_desk(20_000, scale), n_datasets=_desk_datasets(10, scale),
            seed=seed, workers=workers,
        )
        tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "fig3", "seed": seed})


def _reproduce_fig4(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for kind in ("binary_svm", "kmeans_svm"):
        cfg = ExperimentConfig(
            defender=DefenderSpec(kind),
            attacker=AttackerSpec(AttackStrategy("simplified")),
            n_subcarriers=(3,), rho_AE=(0.1, 0.4, 0.9),
            m_training=(100,), n_trials=_desk(20_000, scale), n_datasets=_desk_datasets(10, scale),
            seed=seed, workers=workers,
        )
        tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "fig4", "seed": seed})


def _reproduce_fig5(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for spec in (DefenderSpec("llr"), DefenderSpec("combined"), DefenderSpec("ideal")):
        cfg = ExperimentConfig(
            defender=spec, attacker=AttackerSpec(AttackStrategy("simplified")),
            n_subcarriers=(1, 3, 6), alpha_II=(0.8,), rho_AE=(0.1,),
            target_pfa=1e-2, n_trials=_desk(40_000, scale), n_datasets=_desk_datasets(20, scale),
            seed=seed, workers=workers,
        )
        tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "fig5", "seed": seed})


def _reproduce_fig6(scale: float, seed: int, workers) -> ResultTable:
    cfg = ExperimentConfig(
        defender=DefenderSpec("ocnn", variant="1KNN"),
        attacker=AttackerSpec(AttackStrategy("simplified")),
        n_subcarriers=(1, 3), alpha_I=(1.0,), alpha_II=(0.8, 0.9, 1.0),
        rho_AE=(0.1,), m_training=(1000,),
        n_trials=_desk(20_000, scale), n_datasets=_desk_datasets(10, scale),
            seed=seed, workers=workers,
    )
    return _merge_tables([run_experiment(cfg)], {"target": "fig6", "seed": seed})


def _reproduce_fig7(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for spec in (DefenderSpec("llr"), DefenderSpec("combined")):
        cfg = ExperimentConfig(
            defender=spec, attacker=AttackerSpec(AttackStrategy("simplified")),
            n_subcarriers=(1, 3), alpha_II=(0.8, 0.9, 1.0), rho_AE=(0.1,),
            target_pfa=1e-2, n_trials=_desk(40_000, scale), n_datasets=_desk_datasets(20, scale),
            seed=seed, workers=workers,
        )
        tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "fig7", "seed": seed})


def _reproduce_fig8(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for metric in ("euclidean", "llr"):
        cfg = ExperimentConfig(
            defender=DefenderSpec("ocnn", variant="11NN", metric=metric),
            attacker=AttackerSpec(AttackStrategy("simplified")),
            n_subcarriers=(1, 3, 6), alpha_II=(0.9,), rho_AE=(0.1,),
            m_training=(1000,), n_trials=_desk(20_000, scale), n_datasets=_desk_datasets(10, scale),
            seed=seed, workers=workers,
        )
        tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "fig8", "seed": seed})


def _reproduce_fig9(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for kind in ("binary_svm", "ocsvm"):
        cfg = ExperimentConfig(
            defender=DefenderSpec(kind),
            attacker=AttackerSpec(AttackStrategy("simplified")),
            n_subcarriers=(3,), rho_AE=(0.1, 0.8), m_training=(1000,),
            n_trials=_desk(20_000, scale), n_datasets=_desk_datasets(10, scale),
            seed=seed, workers=workers,
        )
        tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "fig9", "seed": seed})


def _reproduce_fig10(scale: float, seed: int, workers) -> ResultTable:
    tables = []
    for spec, target in (
        (DefenderSpec("llr"), 6.76e-4),
        (DefenderSpec("ocsvm"), None),
    ):
        cfg = ExperimentConfig(
            defender=spec, attacker=AttackerSpec(AttackStrategy("simplified")),
            n_subcarriers=(3,), rho_AE=(0.1,),
            snr_II_db=(10.0, 15.0, 20.0, 25.0), m_training=(1000,),
            target_pfa=target, n_trials=_desk(20_000, scale), n_datasets=_desk_datasets(10, scale),
            seed=seed, workers=workers,
        )
        tables.append(run_experiment(cfg))
    return _merge_tables(tables, {"target": "fig10", "seed": seed})


_REPRODUCERS = {
    "table1": _reproduce_table1,
    "table2": _reproduce_table2,
    "table3": _reproduce_table3,
    "table4": lambda s, seed, w: _reproduce_table45(0.1, "table4", s, seed, w),
    "table5": lambda s, seed, w: _reproduce_table45(0.8, "table5", s, seed, w),
    "fig1": _reproduce_fig1,
    "fig2": _reproduce_fig2,
    "fig3": _reproduce_fig3,
    "fig4": _reproduce_fig4,
    "fig5": _reproduce_fig5,
    "fig6": _reproduce_fig6,
    "fig7": _reproduce_fig7,
    "fig8": _reproduce_fig8,
    "fig9": _reproduce_fig9,
    "fig10": _reproduce_fig10,
}

REPRODUCE_TARGETS = tuple(sorted(_REPRODUCERS))


def reproduce(target: str, scale: float = 1.0, seed: int = 42,
              workers: int | None = None) -> ResultTable:
    """Run one canned experiment. scale in (0, 1] multiplies trial counts."""
    if target not in _REPRODUCERS:
        raise ConfigError(f"unknown reproduce target {target!r}")
    if not 0.0 < scale <= 1.0:
        raise ConfigError("scale must lie in (0, 1]")
    table = _REPRODUCERS[target](scale, seed, workers)
    table.meta.setdefault("target", target)
    table.meta["scale"] = scale
    return table


# --------------------------------------------------------------------------
# serialization

def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def emit(table: ResultTable, fmt: str, path) -> None:
    """Write the table as CSV or JSON with a stable column order."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_format_cell(row.get(c)) for c in table.columns])
        data = buf.getvalue()
        with open(path, "w", newline="") as fh:
            fh.write(data)
    elif fmt == "json":
        doc = {
            "meta": {k: table.meta[k] for k in sorted(table.meta)},
            "columns": table.columns,
            "rows": [
                {c: row.get(c) for c in table.columns if row.get(c) is not None}
                for row in table.rows
            ],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=False)
            fh.write("\n")
    else:
        raise ConfigError(f"unknown format {fmt!r}")


def load(path) -> ResultTable:
    """Read back a table written by emit (format inferred from content)."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        rows = [{c: row.get(c) for c in doc["columns"] if row.get(c) is not None}
                for row in doc["rows"]]
        return ResultTable(columns=doc["columns"], rows=rows, meta=doc.get("meta", {}))
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = []
    for rec in reader:
        row = {c: _parse_cell(v) for c, v in zip(header, rec)}
        rows.append({k: v for k, v in row.items() if v is not None})
    return ResultTable(columns=header, rows=rows, meta={})
