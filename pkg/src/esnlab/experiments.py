"""Registry of reproducible experiments and the runners that turn them into tables.

An experiment descriptor is a plain nested mapping::

    experiment: fig3          # registry name
    mode: curves              # curves | fixed | predict | surface | fivebit | geometry | tiers
    seed: 0
    base: {...}               # ExperimentConfig fields shared by every point
    sweep: {N: [256, 1024]}   # cartesian product over ExperimentConfig fields
    surface: {...}            # mode-specific blocks
    fivebit: {...}
    tiers: {...}

Runners return lists of row dicts; the command-line layer writes them out.
"""
from __future__ import annotations

import copy
import dataclasses
import itertools
import math

import numpy as np

from .analysis import capacity_surface, grid_values, zscore
from .errors import CapabilityError, ConfigError
from .tasks import (
    ExperimentConfig,
    min_reservoir_search,
    run_fixed_length,
    run_trajectory_association,
)
from .theory.moments import analytic_moments
from .theory.perceptron import MomentStatsFull, predict_full, predict_independent, predict_iid

MODES = ("curves", "fixed", "predict", "surface", "fivebit", "geometry", "tiers")
CURVE_COLUMNS = ["experiment", "variant", "matrix", "readout", "N", "D", "alpha", "beta", "gamma", "d",
                 "accuracy_empirical", "stderr", "accuracy_theory_full", "accuracy_theory_indep",
                 "accuracy_theory_iid", "trials"]
SURFACE_COLUMNS = ["beta", "gamma", "I_tot_bits"]
GEOMETRY_COLUMNS = ["readout", "D", "d", "mean_cosine", "etf_target", "mu_h_minus_mu_r_cosine", "sigma_h"]
FIVEBIT_COLUMNS = ["T", "N_star_theory", "N_star_empirical", "target", "seeds"]
TIER_COLUMNS = ["case", "D", "accuracy_full", "accuracy_indep", "accuracy_iid", "accuracy_monte_carlo",
                "stderr_monte_carlo", "samples"]
ZSCORE_COLUMNS = ["readout", "N", "D", "d", "zscore", "accuracy_empirical"]
BLOCK_KEYS = {"experiment", "mode", "seed", "description", "base", "sweep", "surface", "fivebit", "tiers"}

ALL_READOUTS = ["codebook", "cov_coarse", "cov_fine", "regression"]
D25 = {"start": 0, "stop": 25}


def _curves(variant, description, **base):
    return {"mode": "curves", "description": description,
            "base": {"variant": variant, "kind": "permutation", "readout": "codebook", "E": 1000, "M": 0,
                     "R": 3000, "trials": 10, "delays": D25, **base}}


REGISTRY: dict[str, dict] = {
    "fig2": {
        "mode": "fixed",
        "description": "V1 linear reservoir, codebook readout: accuracy against stored length G",
        "base": {"variant": "V1", "kind": "permutation", "readout": "codebook", "n_test": 128, "trials": 10,
                 "G": [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024], "max_delays": 32},
        "sweep": {"N": [256, 1024], "D": [4, 16]},
    },
    "fig3": {**_curves("V2", "V2 linear reservoir with decay: theory against simulation"),
             "sweep": {"N": [256, 1024], "D": [4, 16], "gamma": [0.98, 0.9, 0.7]}},
    "fig4": {**_curves("V3", "V3 tanh reservoir: input scaling controls recency"),
             "sweep": {"N": [256, 1024], "D": [4, 16], "beta": [0.125, 0.25, 0.5]}},
    "fig5": {
        "mode": "curves",
        "description": "V5 leaky tanh reservoir, regression readout: predictions from measured moments",
        "base": {"variant": "V5", "kind": "orthogonal", "readout": "regression", "N": 256, "D": 4,
                 "beta": 0.0625, "gamma": 0.98, "E": 1000, "M": 8192, "R": 3000, "trials": 10,
                 "delays": {"start": 0, "stop": 100}, "theory": "measured"},
        "sweep": {"alpha": [0.99, 0.9, 0.8, 0.6]},
    },
    "fig6": {
        "mode": "surface",
        "description": "Analytic memory capacity of the V4 permutation reservoir over (beta, gamma)",
        "base": {"variant": "V4", "kind": "permutation", "N": 256, "D": 2},
        "surface": {"beta": {"start": 0.0, "stop": 0.5, "step": 0.01},
                    "gamma": {"start": 0.5, "stop": 1.5, "step": 0.01},
                    "predictor": "analytic", "dmax": None, "floor": 1e-3, "run": 5},
    },
    "fig7": {
        "mode": "curves",
        "description": "V2 reservoir: codebook, coarse/fine covariance and regression readouts compared",
        "base": {"variant": "V2", "kind": "orthogonal", "N": 256, "D": 8, "gamma": 0.9, "E": 1000, "M": 5000,
                 "R": 3000, "trials": 10, "delays": D25},
        "sweep": {"readout": ALL_READOUTS},
    },
    "fig8": {
        "mode": "geometry",
        "description": "Geometry of readout rows (cosines, cosine-normalised moments) against delay",
        "base": {"variant": "V2", "kind": "orthogonal", "N": 256, "gamma": 0.9, "E": 1000, "M": 5000, "R": 5000,
                 "trials": 20, "delays": D25, "geometry": True, "theory": "none"},
        "sweep": {"readout": ALL_READOUTS, "D": [2, 4, 8, 16, 32]},
    },
    "figS1": {
        "mode": "tiers",
        "description": "Synthetic Gaussian cases separating the three perceptron-theory tiers",
        "tiers": {"samples": 10_000_000},
    },
    "figS2": {
        "mode": "surface",
        "description": "Empirical capacity of the V5 reservoir with regression readout (long run)",
        "base": {"variant": "V5", "kind": "orthogonal", "readout": "regression", "N": 256, "D": 8, "alpha": 0.99,
                 "E": 1000, "M": 4096, "R": 3000, "trials": 10, "theory": "none"},
        "surface": {"beta": {"start": 0.0, "stop": 0.5, "step": 0.01},
                    "gamma": {"start": 0.5, "stop": 1.5, "step": 0.01},
                    "predictor": "empirical", "dmax": None, "floor": 1e-3, "run": 5},
    },
    "figS3": {**_curves("V4", "V4 tanh reservoir with decay: theory against simulation"),
              "sweep": {"N": [256, 1024], "D": [4, 16], "beta": [0.125, 0.25, 0.5], "gamma": [0.99, 0.9, 0.7]}},
    "figS4": {
        "mode": "geometry",
        "description": "Regression readout under state noise in the recall, training or both phases",
        "base": {"variant": "V2", "kind": "orthogonal", "readout": "regression", "N": 256, "D": 4, "gamma": 0.9,
                 "E": 1000, "M": 5000, "R": 5000, "trials": 20, "delays": D25, "geometry": True,
                 "theory": "none"},
        "sweep": {"snr_db": [0.0, 10.0, 20.0, 30.0], "noise_phases": [["recall"], ["train"], ["train", "recall"]]},
    },
    "figS5": {
        "mode": "curves",
        "description": "Z-scores of the four readouts (V2, D=16)",
        "base": {"variant": "V2", "kind": "orthogonal", "N": 256, "D": 16, "gamma": 0.9, "E": 1000, "M": 5000,
                 "R": 5000, "trials": 20, "delays": D25, "theory": "none"},
        "sweep": {"readout": ALL_READOUTS},
    },
    "figS6": {
        "mode": "fivebit",
        "description": "Smallest reservoir solving the 5-bit memory task against distractor period",
        "base": {"variant": "V4", "kind": "permutation", "D": 4, "beta": 0.015625, "gamma": 0.99, "trials": 50},
        "fivebit": {"T": {"start": 5, "stop": 100, "step": 5}, "target": 0.99, "seeds": 50,
                    "search": ["theory", "empirical"], "n_max": 1 << 20},
    },
}


# ------------------------------------------------------------------ descriptors

def _expand_range(value, key: str, as_float: bool = False):
    if isinstance(value, dict):
        try:
            start, stop, step = value.get("start", 0), value["stop"], value.get("step", 1)
        except KeyError as exc:
            raise ConfigError("range needs 'stop'", key) from exc
        if as_float:
            return [float(v) for v in grid_values(float(start), float(stop), float(step))]
        return list(range(int(start), int(stop) + 1, int(step)))
    if isinstance(value, (int, float)):
        return [value]
    return list(value)


def resolve(descriptor: dict) -> dict:
    """Fill defaults from the registry and validate every point.

    Returns a descriptor in which every ExperimentConfig default is explicit.
    """
    desc = copy.deepcopy(descriptor)
    for key in desc:
        if key not in BLOCK_KEYS:
            raise ConfigError("unknown key", key)
    name = desc.get("experiment")
    if name in REGISTRY:
        merged = copy.deepcopy(REGISTRY[name])
        for key, value in desc.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key].update(value)
            else:
                merged[key] = value
        desc = merged
    desc.setdefault("experiment", name or "custom")
    mode = desc.setdefault("mode", "curves")
    if mode not in MODES:
        raise ConfigError(f"must be one of {MODES}", "mode")
    desc.setdefault("seed", 0)
    desc.setdefault("description", "")
    base = dict(desc.get("base") or {})
    if mode == "geometry":
        base["geometry"] = True
    if "delays" in base:
        base["delays"] = _expand_range(base["delays"], "base.delays")
    base["seed"] = int(desc["seed"])
    sweep = dict(desc.get("sweep") or {})
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in sweep:
        if key not in fields:
            raise ConfigError("unknown key", f"sweep.{key}")
        sweep[key] = _expand_range(sweep[key], f"sweep.{key}")
    cfg = ExperimentConfig.from_dict(base, "base.") if mode != "tiers" else ExperimentConfig()
    desc["base"] = cfg.to_dict()
    desc["sweep"] = sweep
    if mode != "tiers":
        for point in sweep_points(desc):
            _check_point(point, sweep)
    if mode == "surface":
        surf = {"predictor": "analytic", "dmax": None, "floor": 1e-3, "run": 5, **(desc.get("surface") or {})}
        for axis in ("beta", "gamma"):
            if axis not in surf:
                raise ConfigError("surface grid axis missing", f"surface.{axis}")
        if surf["predictor"] == "analytic" and cfg.readout != "codebook":
            raise ConfigError("analytic capacity uses the codebook readout", "base.readout")
        desc["surface"] = surf
    if mode == "fivebit":
        fb = {"target": 0.99, "seeds": 50, "search": ["theory", "empirical"], "n_max": 1 << 20,
              **(desc.get("fivebit") or {})}
        if "T" not in fb:
            raise ConfigError("distractor periods missing", "fivebit.T")
        for s in fb["search"]:
            if s not in ("theory", "empirical"):
                raise ConfigError(f"unknown search mode {s!r}", "fivebit.search")
        if cfg.D != 4:
            raise ConfigError("the 5-bit task uses D = 4", "base.D")
        desc["fivebit"] = fb
    if mode == "tiers":
        desc["tiers"] = {"samples": 10_000_000, **(desc.get("tiers") or {})}
    return desc


def _check_point(cfg: ExperimentConfig, sweep: dict) -> None:
    try:
        cfg.validate()
    except ConfigError as exc:
        key = exc.key or ""
        where = "sweep." + key if key in sweep else "base." + key
        raise ConfigError(str(exc).split(": ", 1)[-1], where) from exc


def sweep_points(desc: dict) -> list[ExperimentConfig]:
    base = ExperimentConfig(**{k: v for k, v in desc["base"].items()})
    keys = list(desc["sweep"])
    points = []
    for values in itertools.product(*(desc["sweep"][k] for k in keys)):
        points.append(base.replace(**dict(zip(keys, values))))
    return points or [base]


def apply_override(desc: dict, text: str) -> dict:
    """Apply ``key=value`` with a dotted key path; the value is parsed as YAML.

    A bare key that names an ExperimentConfig field (other than ``seed``)
    goes to ``base``.
    """
    import yaml

    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value {raw!r}", key) from exc
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    path = key.split(".")
    if len(path) == 1 and path[0] not in BLOCK_KEYS and path[0] in fields:
        path = ["base", path[0]]
    node = desc
    for part in path[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError("cannot descend into a scalar", key)
    node[path[-1]] = value
    return desc


def descriptor_for(name: str) -> dict:
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}; see 'esnlab list'", "experiment")
    return {"experiment": name}


# ------------------------------------------------------------------ runners

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "" if math.isnan(x) else repr(x)
    return str(x)


def _curve_rows(name: str, cfg: ExperimentConfig, result, xs=None) -> list[dict]:
    emp = result.empirical
    rows = []
    for k, d in enumerate(emp.delays):
        row = {"experiment": name, "variant": cfg.variant, "matrix": cfg.kind, "readout": cfg.readout, "N": cfg.N,
               "D": cfg.D, "alpha": cfg.alpha, "beta": cfg.beta, "gamma": cfg.gamma, "d": int(d),
               "accuracy_empirical": float(emp.accuracy[k]),
               "stderr": float(emp.stderr[k]) if emp.stderr is not None else None, "trials": result.trials}
        for tier in ("full", "indep", "iid"):
            curve = result.predicted.get(tier)
            row[f"accuracy_theory_{tier}"] = float(curve.accuracy[k]) if curve is not None else None
        rows.append(row)
    return rows


def run_curves(desc: dict, jobs: int | None = 1) -> dict:
    name = desc["experiment"]
    rows, zrows, geo, notes = [], [], [], []
    for cfg in sweep_points(desc):
        if desc["mode"] == "fixed":
            result = run_fixed_length(cfg, jobs)
        else:
            result = run_trajectory_association(cfg, jobs)
        rows += _curve_rows(name, cfg, result)
        notes += result.notes
        if desc["mode"] != "fixed":
            for k, d in enumerate(result.empirical.delays):
                m = result.moments[int(d)]
                zrows.append({"readout": cfg.readout, "N": cfg.N, "D": cfg.D, "d": int(d), "zscore": zscore(m),
                              "accuracy_empirical": float(result.empirical.accuracy[k])})
        if cfg.geometry:
            for d, g in result.geometry.items():
                geo.append({"readout": cfg.readout, "D": cfg.D, "d": int(d), "mean_cosine": g["mean_cosine"],
                            "etf_target": g["etf_target"], "mu_h_minus_mu_r_cosine": g["mu_h_minus_mu_r_cosine"],
                            "sigma_h": g["sigma_h"]})
    tables = {"curves": (CURVE_COLUMNS, rows)}
    if zrows:
        tables["zscores"] = (ZSCORE_COLUMNS, zrows)
    if geo:
        tables["geometry"] = (GEOMETRY_COLUMNS, geo)
    return {"tables": tables, "notes": sorted(set(notes))}


def run_predict(desc: dict, jobs: int | None = 1) -> dict:
    """Theory-only curves from hyperparameters (i.i.d.-distractor tier)."""
    name = desc["experiment"]
    rows = []
    for cfg in sweep_points(desc):
        params = cfg.params()
        xs = list(cfg.G) if cfg.fixed_length else list(cfg.delays)
        for x in xs:
            if cfg.fixed_length:
                stats = analytic_moments(params, G=x) if cfg.variant == "V1" else None
                if stats is None:
                    raise CapabilityError("fixed-length predictions cover V1 only")
            else:
                stats = analytic_moments(params, d=x)
            rows.append({"experiment": name, "variant": cfg.variant, "matrix": cfg.kind, "readout": cfg.readout,
                         "N": cfg.N, "D": cfg.D, "alpha": cfg.alpha, "beta": cfg.beta, "gamma": cfg.gamma,
                         "d": x, "accuracy_empirical": None, "stderr": None, "accuracy_theory_full": None,
                         "accuracy_theory_indep": None, "accuracy_theory_iid": predict_iid(stats, cfg.D),
                         "trials": 0})
    return {"tables": {"curves": (CURVE_COLUMNS, rows)}, "notes": []}


def run_surface(desc: dict, jobs: int | None = 1) -> dict:
    cfg = sweep_points(desc)[0]
    s = desc["surface"]
    betas = _expand_range(s["beta"], "surface.beta", as_float=True)
    gammas = _expand_range(s["gamma"], "surface.gamma", as_float=True)
    surf = capacity_surface(cfg, betas, gammas, s["predictor"], D=cfg.D, dmax=s["dmax"], floor=s["floor"],
                            run=s["run"], jobs=jobs or 1, trials=cfg.trials, seed=cfg.seed, length=cfg.R)
    rows = [{"beta": b, "gamma": g, "I_tot_bits": v} for b, g, v in surf.rows()]
    n_inc = int(np.sum(surf.incomplete))
    notes = [f"{n_inc} cells never settled at chance inside d_max; their sums are partial"] if n_inc else []
    b, g = surf.argmax()
    return {"tables": {"surface": (SURFACE_COLUMNS, rows)}, "notes": notes,
            "summary": {"argmax_beta": b, "argmax_gamma": g, "max_bits": float(np.max(surf.bits))}}


def run_fivebit(desc: dict, jobs: int | None = 1) -> dict:
    cfg = sweep_points(desc)[0]
    fb = desc["fivebit"]
    rows = []
    for T in _expand_range(fb["T"], "fivebit.T"):
        row = {"T": int(T), "N_star_theory": None, "N_star_empirical": None, "target": fb["target"],
               "seeds": fb["seeds"]}
        if "theory" in fb["search"]:
            row["N_star_theory"] = min_reservoir_search(T, cfg, fb["target"], "theory", n_max=fb["n_max"])
        if "empirical" in fb["search"]:
            row["N_star_empirical"] = min_reservoir_search(T, cfg, fb["target"], "empirical", seeds=fb["seeds"],
                                                           n_max=fb["n_max"], jobs=jobs)
        rows.append(row)
    return {"tables": {"fivebit": (FIVEBIT_COLUMNS, rows)}, "notes": []}


def _symmetric_stats(mean, cov) -> MomentStatsFull:
    """Class-conditional moments where class i mirrors class 0 with indices 0 and i swapped."""
    mean, cov = np.asarray(mean, float), np.asarray(cov, float)
    D = len(mean)
    means, covs = np.empty((D, D)), np.empty((D, D, D))
    for i in range(D):
        p = list(range(D))
        p[0], p[i] = p[i], p[0]
        means[i], covs[i] = mean[p], cov[np.ix_(p, p)]
    return MomentStatsFull(means, covs)


def tier_cases() -> dict:
    """Two D=3 Gaussian cases (true class 0) that separate the theory tiers.

    ``unequal``: independent inputs, distractor spreads 0.1 and 3; pooling the
    distractors into one spread overstates accuracy.
    ``correlated``: hit and distractors are negatively correlated; ignoring
    the correlation overstates accuracy.
    """
    return {
        "unequal": ([5.0, 0.0, 0.0], np.diag([1.0, 0.01, 9.0])),
        "correlated": ([1.5, 0.0, 0.0], np.array([[1.0, -0.5, -0.5], [-0.5, 1.0, 0.25], [-0.5, 0.25, 1.0]])),
    }


def monte_carlo_accuracy(mean, cov, samples: int, seed: int = 0, chunk: int = 1_000_000):
    """Fraction of Gaussian draws where component 0 is the strict maximum, with its standard error."""
    from .codec import substream

    rng = substream(seed, 0)
    L = np.linalg.cholesky(np.asarray(cov, float))
    mean = np.asarray(mean, float)
    hits, done = 0, 0
    while done < samples:
        n = min(chunk, samples - done)
        X = mean + rng.standard_normal((n, len(mean))) @ L.T
        hits += int(np.count_nonzero(X[:, 0] > X[:, 1:].max(axis=1)))
        done += n
    p = hits / samples
    return p, math.sqrt(p * (1 - p) / samples)


def run_tiers(desc: dict, jobs: int | None = 1) -> dict:
    samples = int(desc["tiers"]["samples"])
    rows = []
    for k, (case, (mean, cov)) in enumerate(tier_cases().items()):
        stats = _symmetric_stats(mean, cov)
        p_mc, se = monte_carlo_accuracy(mean, cov, samples, seed=desc["seed"] + k)
        rows.append({"case": case, "D": len(mean), "accuracy_full": predict_full(stats, tol=1e-5).per_class[0],
                     "accuracy_indep": predict_independent(mean, np.sqrt(np.diag(cov)), 0),
                     "accuracy_iid": predict_iid(stats.reduced(), len(mean)), "accuracy_monte_carlo": p_mc,
                     "stderr_monte_carlo": se, "samples": samples})
    return {"tables": {"tiers": (TIER_COLUMNS, rows)}, "notes": []}


RUNNERS = {"curves": run_curves, "fixed": run_curves, "geometry": run_curves, "predict": run_predict,
           "surface": run_surface, "fivebit": run_fivebit, "tiers": run_tiers}


def run_descriptor(desc: dict, jobs: int | None = 1) -> dict:
    return RUNNERS[desc["mode"]](desc, jobs)


def format_row(columns, row) -> list[str]:
    return [_fmt(row.get(c)) for c in columns]


__all__ = ["REGISTRY", "MODES", "CURVE_COLUMNS", "SURFACE_COLUMNS", "GEOMETRY_COLUMNS", "resolve",
           "sweep_points", "apply_override", "descriptor_for", "run_descriptor", "tier_cases",
           "monte_carlo_accuracy", "format_row"]
