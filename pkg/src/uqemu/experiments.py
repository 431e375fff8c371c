"""Seeded experiments that check every quantitative guarantee numerically.

Each experiment turns an :class:`ExperimentConfig` into a list of
:class:`ResultRow`.  A row compares ``measured`` against ``bound`` with the
relation and tolerance registered for the experiment, so ``passed`` can be
recomputed from the other columns.  Trial ``i`` uses the seed
``trial_seed(cfg.seed, i)``; adding trials never changes earlier rows.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import channels, dme, emulator, extensions
from .errors import ConfigError, EmulatorError, ResourceError
from .instances import EmulationProblem, generate_instance, pauli_instance, random_ket
from .numerics import basis, projector, trace_norm_distance, uhlmann_fidelity

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One output of the SplitMix64 generator for state ``x``."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for trial ``index`` derived from the master seed."""
    return splitmix64((seed & MASK64) ^ splitmix64(index))


# ----------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    description: str
    relation: str  # "<=", ">=" or "~" (|measured - bound| <= tol)
    defaults: dict
    runner: Callable = field(repr=False, compare=False)


EXPERIMENTS: dict = {}

CONFIG_FIELDS = ("experiment", "dims", "T", "n", "delta", "trials", "samples", "seed", "mode", "output_path", "timing")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration; unset fields take the experiment defaults."""

    experiment: str
    dims: Optional[tuple] = None
    T: tuple = ()
    n: tuple = ()
    delta: tuple = ()
    trials: int = 1
    samples: int = 1
    seed: int = 0
    mode: str = "EXACT"
    output_path: Optional[str] = None
    timing: bool = False

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("T", "n", "delta"):
            d[key] = list(d[key])
        if d["dims"] is not None:
            d["dims"] = list(d["dims"])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def replace(self, **kw) -> "ExperimentConfig":
        return validate_config({**self.to_dict(), **{k: v for k, v in kw.items() if v is not None}})


def _as_list(name, value, kind):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(f"field '{name}' must be a nonempty list")
    try:
        return tuple(kind(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field '{name}' has an invalid entry: {exc}") from None


def validate_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    name = doc.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(f"field 'experiment' must be one of {sorted(EXPERIMENTS)}, got {name!r}")
    merged = {**EXPERIMENTS[name].defaults, **{k: v for k, v in doc.items() if v is not None or k == "dims"}}
    if "dims" not in doc:
        merged["dims"] = EXPERIMENTS[name].defaults.get("dims")
    dims = merged.get("dims")
    if dims is not None:
        dims = _as_list("dims", dims, int)
        if len(dims) != 3:
            raise ConfigError("field 'dims' must be [D, d, K]")
        D, d, K = dims
        if not (1 <= d <= D and K >= d):
            raise ConfigError(f"field 'dims' needs 1 <= d <= D and K >= d, got {list(dims)}")
    T = _as_list("T", merged.get("T", [1]), int)
    n = _as_list("n", merged.get("n", [1]), int)
    delta = _as_list("delta", merged.get("delta", [0.0]), float)
    if min(T) < 1:
        raise ConfigError("field 'T' entries must be >= 1")
    if min(n) < 1:
        raise ConfigError("field 'n' entries must be >= 1")
    if min(delta) < 0:
        raise ConfigError("field 'delta' entries must be >= 0")
    trials = merged.get("trials", 1)
    samples = merged.get("samples", 1)
    for key, val in (("trials", trials), ("samples", samples)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise ConfigError(f"field '{key}' must be an integer >= 1, got {val!r}")
    seed = merged.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= MASK64:
        raise ConfigError(f"field 'seed' must be a 64-bit unsigned integer, got {seed!r}")
    mode = str(merged.get("mode", "EXACT")).upper()
    if mode not in ("EXACT", "MC"):
        raise ConfigError(f"field 'mode' must be EXACT or MC, got {merged.get('mode')!r}")
    out = merged.get("output_path")
    if out is not None and not isinstance(out, str):
        raise ConfigError("field 'output_path' must be a string")
    timing = merged.get("timing", False)
    if not isinstance(timing, bool):
        raise ConfigError("field 'timing' must be a boolean")
    return ExperimentConfig(name, dims, T, n, delta, trials, samples, seed, mode, out, timing)


def parse_config(text: str) -> ExperimentConfig:
    """Parse a JSON config document, filling experiment defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ConfigError(f"malformed config at line {exc.lineno}, column {exc.colno}: {exc.msg}\n  {context}") from None
    return validate_config(doc)


# ----------------------------------------------------------------------------
# results


@dataclass
class ResultRow:
    """One checked quantity.  ``notes`` holds derived values worth reporting (not parameters)."""

    experiment: str
    params: dict
    measured: float
    bound: float
    passed: bool
    stderr: Optional[float] = None
    wall_ms: Optional[float] = None
    notes: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict:
        d = dataclasses.asdict(self)
        if not timing:
            d["wall_ms"] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRow":
        return cls(**d)


CSV_HEADER = ("experiment", "params", "measured", "bound", "passed", "stderr", "wall_ms", "notes")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.12g" % x


def _kv(d: dict) -> str:
    return ";".join(f"{k}={_fmt(v)}" for k, v in d.items())


def format_results(rows, fmt: str = "csv", timing: bool = False) -> str:
    """CSV (fixed header, 12 significant digits) or JSON lines."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(
                [
                    r.experiment,
                    _kv(r.params),
                    _fmt(r.measured),
                    _fmt(r.bound),
                    _fmt(bool(r.passed)),
                    _fmt(r.stderr),
                    _fmt(r.wall_ms) if timing else "",
                    _kv(r.notes),
                ]
            )
        return buf.getvalue()
    if fmt == "jsonl":
        return "".join(json.dumps(r.to_dict(timing)) + "\n" for r in rows)
    raise ConfigError(f"format must be 'csv' or 'jsonl', got {fmt!r}")


def emit_results(rows, fmt: str = "csv", path: Optional[str] = None, timing: bool = False) -> str:
    """Write rows to ``path`` (or return the text only when ``path`` is None)."""
    text = format_results(rows, fmt, timing)
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc
    return text


def read_jsonl(text: str) -> list:
    return [ResultRow.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def check_relation(relation: str, measured: float, bound: float, tol: float) -> bool:
    if relation == "<=":
        return measured <= bound + tol
    if relation == ">=":
        return measured >= bound - tol
    if relation == "~":
        return abs(measured - bound) <= tol
    raise ValueError(f"unknown relation {relation!r}")


# ----------------------------------------------------------------------------
# runners


def _row(name, params, measured, bound, tol, stderr=None, notes=None, t0=None):
    rel = EXPERIMENT_RELATIONS_OVERRIDE.get((name, params.get("check")), EXPERIMENTS[name].relation)
    passed = check_relation(rel, float(measured), float(bound), tol)
    notes = dict(notes or {})
    notes["tol"] = tol
    wall = None if t0 is None else (time.perf_counter() - t0) * 1e3
    return ResultRow(name, params, float(measured), float(bound), bool(passed), stderr, wall, notes)


def _ket_in(problem: EmulationProblem, rng) -> np.ndarray:
    q = problem.samples.basis_in
    return q @ random_ket(q.shape[1], rng)


def _cycle_dims(cfg: ExperimentConfig, i: int):
    if cfg.dims is not None:
        return cfg.dims
    D = (4, 8, 16)[i % 3]
    d = (2, 3, 4)[(i // 3) % 3]
    return D, d, d + 1


def _run_theorem1(cfg: ExperimentConfig):
    rows = []
    for i in range(cfg.trials):
        t0 = time.perf_counter()
        seed = trial_seed(cfg.seed, i)
        rng = np.random.default_rng(seed)
        D, d, K = _cycle_dims(cfg, i)
        T = cfg.T[i % len(cfg.T)]
        params = {"trial": i, "D": D, "d": d, "K": K, "T": T}
        problem = generate_instance(D, d, K, rng)
        psi = _ket_in(problem, rng) if i % 2 == 0 else random_ket(D, rng)
        mode = emulator.EXACT if cfg.mode == "EXACT" else emulator.MonteCarlo(cfg.samples, rng)
        try:
            est = emulator.channel_estimate(problem, psi, T, mode)
            post, p_succ = emulator.postselected_output(problem, psi, T, mode)
        except ResourceError as exc:
            raise ResourceError(f"{exc} at {params}") from None
        target = problem.samples.hidden_unitary @ psi
        p = channels.erase_probability(problem, psi, T)
        f = uhlmann_fidelity(est.state, target)
        f_post = uhlmann_fidelity(post, target)
        margin = min(f - p, f_post - math.sqrt(p))
        tol = 1e-9 + 3 * est.stderr_trace_norm
        notes = {"fidelity": f, "p_erase": p, "fidelity_post": f_post, "p_success_enumerated": p_succ}
        rows.append(_row("theorem1", params, margin, 0.0, tol, est.stderr_trace_norm if cfg.mode == "MC" else None, notes, t0))
    return rows


def _run_theorem2(cfg: ExperimentConfig):
    rows = []
    cap = cfg.T[0]
    eps = cfg.delta[0]
    found = 0
    attempt = 0
    while found < cfg.trials:
        t0 = time.perf_counter()
        seed = trial_seed(cfg.seed, attempt)
        attempt += 1
        rng = np.random.default_rng(seed)
        if cfg.dims is not None:
            D, d, K = cfg.dims
        else:
            D, d = (4, 2) if found % 2 == 0 else (6, 3)
            K = 2 * d + 2
        problem = generate_instance(D, d, K, rng)
        lam = channels.lambda_D(channels.build_D(problem.samples))
        if lam > 0.8:
            continue
        T_req = channels.required_T(d, eps, lam)
        T = min(T_req, cap)
        psi = _ket_in(problem, rng)
        mode = emulator.MonteCarlo(cfg.samples, rng) if cfg.mode == "MC" else emulator.EXACT
        est = emulator.channel_estimate(problem, psi, T, mode)
        err = trace_norm_distance(est.state, projector(problem.samples.hidden_unitary @ psi))
        se = est.stderr_trace_norm
        params = {"trial": found, "D": D, "d": d, "K": K, "T": T}
        notes = {"lambda_D": lam, "T_required": T_req, "p_erase": est.p_erase}
        rows.append(_row("theorem2_T_bound", params, err, eps, 3 * se, se, notes, t0))
        found += 1
    return rows


def _run_lambda_perp(cfg: ExperimentConfig):
    rows = []
    for i in range(cfg.trials):
        t0 = time.perf_counter()
        rng = np.random.default_rng(trial_seed(cfg.seed, i))
        if cfg.dims is not None:
            D, d, K = cfg.dims
        else:
            d = int(rng.integers(1, 5))
            D = int(rng.integers(d, 9))
            K = int(rng.integers(d, 2 * d + 3)) if d > 1 else 1
            K = max(K, d + (1 if d > 1 else 0))
        problem = generate_instance(D, d, K, rng)
        dchan = channels.build_D(problem.samples)
        lam = channels.lambda_D(dchan)
        lp = channels.lambda_perp(dchan, projector(problem.anchor_in))
        bound = 1 - (1 - lam) / d
        rows.append(_row("lambda_perp_bound", {"trial": i, "D": D, "d": d, "K": K}, lp, bound, 1e-9, None, {"lambda_D": lam}, t0))
    return rows


def _run_pauli_erase(cfg: ExperimentConfig):
    rows = []
    problem = pauli_instance()
    psi = basis(2, 1)
    for T in cfg.T:
        t0 = time.perf_counter()
        p = channels.erase_probability(problem, psi, T)
        rows.append(_row("pauli_erase", {"T": T}, p, 1 - 3.0**-T, 1e-12, None, None, t0))
    return rows


def _run_dme_scaling(cfg: ExperimentConfig):
    from .instances import random_density

    rows = []
    ns = list(cfg.n)
    t = cfg.delta[0] if cfg.delta[0] > 0 else 1.0
    for i in range(cfg.trials):
        rng = np.random.default_rng(trial_seed(cfg.seed, i))
        D = cfg.dims[0] if cfg.dims is not None else 2
        sigma = random_density(D, seed=rng)
        t0 = time.perf_counter()
        curve = dme.dme_error_curve(sigma, t, ns)
        slope = dme.loglog_slope(ns, [e for _, e in curve])
        notes = {f"err_n{n}": e for n, e in curve}
        rows.append(_row("dme_scaling", {"trial": i, "D": D, "t": t, "check": "slope"}, slope, -1.0, 0.15, None, notes, t0))
        t0 = time.perf_counter()
        n_ref = 128 if 128 in ns else ns[-1]
        ratio = dme.dme_error(sigma, 2 * t, n_ref) / dme.dme_error(sigma, t, n_ref)
        rows.append(_row("dme_scaling", {"trial": i, "D": D, "t": t, "check": "doubling", "n": n_ref}, ratio, 4.5, 0.0, None, None, t0))
    return rows


EXPERIMENT_RELATIONS_OVERRIDE = {("dme_scaling", "doubling"): "<=", ("projective_bound", "fidelity"): ">="}


def _run_rus(cfg: ExperimentConfig):
    rows = []
    for r in cfg.n:
        t0 = time.perf_counter()
        rng = np.random.default_rng(trial_seed(cfg.seed, r))
        successes = 0
        worst = 0.0
        for j in range(cfg.samples):
            theta = float(rng.uniform(-np.pi, np.pi))
            res = dme.rus_swap_exponential(theta, r, rng)
            if res.success:
                successes += 1
                worst = max(worst, float(np.max(np.abs(res.unitary - dme.swap_exponential(theta)))))
        p = successes / cfg.samples
        target = 1 - 2.0**-r
        se = math.sqrt(target * (1 - target) / cfg.samples)
        row = _row("rus_success", {"rounds": r, "runs": cfg.samples}, p, target, 3 * se, se, {"max_unitary_error": worst}, t0)
        row.passed = bool(row.passed and worst <= 1e-10)
        rows.append(row)
    return rows


def _run_projective(cfg: ExperimentConfig):
    rows = []
    for i in range(cfg.trials):
        t0 = time.perf_counter()
        rng = np.random.default_rng(trial_seed(cfg.seed, i))
        if cfg.dims is not None:
            D, _, K = cfg.dims
        else:
            D = int(rng.integers(2, 9))
            K = int(rng.integers(1, 5))
        T_max = min(max(cfg.T), int(math.floor(math.log(emulator.EXACT_BUDGET) / math.log(K))) if K > 1 else max(cfg.T))
        T = int(rng.integers(1, T_max + 1))
        mp = extensions.random_measurement_problem(D, K, T, rng)
        q = mp.basis
        inside = i % 2 == 0 or q.shape[1] == D
        if inside:
            psi = q @ random_ket(q.shape[1], rng)
        else:
            comp = np.linalg.svd(np.eye(D) - mp.projector)[0][:, : D - q.shape[1]]
            psi = comp @ random_ket(comp.shape[1], rng)
        report = extensions.projective_fidelity_check(mp, psi)
        freq = extensions.sample_out_frequency(mp, psi, cfg.samples, rng)
        wrong = freq if inside else 1 - freq
        bound = report.error_bound
        p_exact = report.error_probability
        se = math.sqrt(max(p_exact * (1 - p_exact), 0.0) / cfg.samples)
        params = {"trial": i, "D": D, "K": K, "T": T, "branch": "in" if inside else "out"}
        notes = {"lambda_min": mp.lambda_min, "p_wrong_exact": p_exact}
        rows.append(_row("projective_bound", {**params, "check": "error"}, wrong, bound, 3 * se, se, notes, t0))
        maxp = max(report.label_probabilities.values())
        rows.append(_row("projective_bound", {**params, "check": "fidelity"}, report.fidelity, maxp, 1e-9))
    return rows


def _run_conjugate(cfg: ExperimentConfig):
    rows = []
    for i in range(cfg.trials):
        t0 = time.perf_counter()
        rng = np.random.default_rng(trial_seed(cfg.seed, i))
        if cfg.dims is not None:
            D, d, _ = cfg.dims
        else:
            d = (2, 3, 4)[i % 3]
            D = (4, 8)[(i // 3) % 2]
        cb = extensions.random_conjugate_basis_set(D, d, rng)
        psi = cb.theta_in.T @ random_ket(d, rng)
        out = extensions.conjugate_basis_emulation(cb, psi)
        fid = abs(np.vdot(cb.hidden_unitary @ psi, out))
        rows.append(_row("conjugate_exactness", {"trial": i, "D": D, "d": d}, fid, 1.0, 1e-9, None, None, t0))
    return rows


def _run_delta(cfg: ExperimentConfig):
    rows = []
    D, d, K = cfg.dims if cfg.dims is not None else (4, 2, 3)
    T = cfg.T[0]
    for i in range(cfg.trials):
        t0 = time.perf_counter()
        seed = trial_seed(cfg.seed, i)
        rng = np.random.default_rng(seed)
        problem = generate_instance(D, d, K, rng)
        psi = _ket_in(problem, rng)
        pert_seed = int(rng.integers(2**63))
        target = projector(problem.samples.hidden_unitary @ psi)
        err0 = trace_norm_distance(emulator.channel_output(problem, psi, T), target)
        errs = [extensions.perturbed_sample_run(problem, dl, psi, T, pert_seed) for dl in cfg.delta]
        slope, r2 = extensions.line_fit_through(cfg.delta, errs, 0.0, err0)
        notes = {"slope": slope, "ideal_error": err0}
        notes.update({f"err_delta{dl:g}": e for dl, e in zip(cfg.delta, errs)})
        rows.append(_row("delta_robustness", {"trial": i, "D": D, "d": d, "K": K, "T": T}, r2, 0.9, 0.0, None, notes, t0))
    return rows


def _run_representation(cfg: ExperimentConfig):
    rows = []
    for i in range(cfg.trials):
        t0 = time.perf_counter()
        rng = np.random.default_rng(trial_seed(cfg.seed, i))
        D, d, K = cfg.dims if cfg.dims is not None else ((4, 8)[i % 2], 2 + i % 2, 4)
        T = cfg.T[i % len(cfg.T)]
        problem = generate_instance(D, d, K, rng)
        psi = random_ket(D, rng) if i % 3 == 0 else _ket_in(problem, rng)
        ks = rng.integers(K, size=T)
        full = emulator.step_i_state(problem, psi, ks, "full")
        compact = emulator.compact_to_full(emulator.step_i_state(problem, psi, ks, "compact"))
        diff = float(np.max(np.abs(full - compact)))
        notes = {"off_wall_weight": emulator.off_wall_weight(full, D)}
        rows.append(_row("representation_equivalence", {"trial": i, "D": D, "d": d, "K": K, "T": T}, diff, 1e-10, 0.0, None, notes, t0))
    return rows


def _run_budget(cfg: ExperimentConfig):
    rows = []
    D, d, K = cfg.dims if cfg.dims is not None else (4, 2, 3)
    T = cfg.T[0]
    for i in range(cfg.trials):
        rng = np.random.default_rng(trial_seed(cfg.seed, i))
        problem = generate_instance(D, d, K, rng)
        psi = _ket_in(problem, rng)
        run_seed = int(rng.integers(2**63))
        for n in cfg.n:
            t0 = time.perf_counter()
            rec, budget = dme.noisy_emulation_run(problem, psi, T, n, run_seed)
            bound = budget.eps_tot + 0.05
            notes = {"eps_ref": budget.eps_ref, "eps_id": budget.eps_id, "N_tot": budget.N_tot}
            rows.append(_row("error_budget", {"trial": i, "D": D, "d": d, "K": K, "T": T, "n": n}, rec.trace_distance, bound, 0.0, None, notes, t0))
    return rows


def _run_controlled(cfg: ExperimentConfig):
    rows = []
    D, d, K = cfg.dims if cfg.dims is not None else (2, 1, 1)
    for i in range(cfg.trials):
        t0 = time.perf_counter()
        rng = np.random.default_rng(trial_seed(cfg.seed, i))
        T = cfg.T[i % len(cfg.T)]
        base = generate_instance(D, d, K, rng)
        s = base.samples
        phi = _ket_in(base, rng)
        a = float(rng.uniform(0.3, 0.95))
        alpha, beta = a, math.sqrt(1 - a * a) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        aug = extensions.controlled_unitary_sampleset(s, alpha, beta, phi)
        problem = EmulationProblem(aug, aug.K - 1, 0)
        psi = np.kron(random_ket(2, rng), s.basis_in @ random_ket(s.dim_subspace, rng))
        params = {"trial": i, "D": D, "d": d, "K": K, "T": T}
        try:
            out = emulator.channel_output(problem, psi, T)
        except ResourceError as exc:
            raise ResourceError(f"{exc} at {params}") from None
        target = aug.hidden_unitary @ psi
        f = uhlmann_fidelity(out, target)
        p = channels.erase_probability(problem, psi, T)
        wrong_phase = np.kron(np.diag([1.0, -1.0]), np.eye(D)) @ target
        notes = {"p_erase": p, "fidelity_wrong_phase": uhlmann_fidelity(out, wrong_phase)}
        rows.append(_row("controlled_unitary", params, f, p, 1e-9, None, notes, t0))
    return rows


def _register(name, description, relation, defaults, runner):
    EXPERIMENTS[name] = ExperimentSpec(name, description, relation, defaults, runner)


_register(
    "theorem1",
    "fidelity >= p_erase (channel) and >= sqrt(p_erase) (postselected); measured = smallest margin",
    ">=",
    {"T": [1, 2, 3, 4, 5], "trials": 100, "samples": 20000, "mode": "EXACT"},
    _run_theorem1,
)
_register(
    "theorem2_T_bound",
    "trace distance <= eps_id (delta[0]) with T = required_T capped at T[0]; instances with |lambda_D| <= 0.8",
    "<=",
    {"T": [14], "delta": [0.1], "trials": 20, "samples": 20000, "mode": "MC"},
    _run_theorem2,
)
_register("lambda_perp_bound", "|lambda_perp| <= 1 - (1 - |lambda_D|)/d", "<=", {"trials": 500}, _run_lambda_perp)
_register("pauli_erase", "qubit instance {0,+,+i}: p_erase(T) = 1 - 3^-T", "~", {"T": list(range(1, 11))}, _run_pauli_erase)
_register(
    "dme_scaling",
    "log-log slope of DME error vs n is -1 +- 0.15; doubling t grows error <= 4.5x (t = delta[0])",
    "~",
    {"n": [8, 16, 32, 64, 128, 256], "delta": [1.0], "trials": 3},
    _run_dme_scaling,
)
_register(
    "rus_success",
    "repeat-until-success success rate after r = n rounds is 1 - 2^-r within 3 sigma",
    "~",
    {"n": [1, 2, 3, 4, 5, 6], "samples": 10000},
    _run_rus,
)
_register(
    "projective_bound",
    "wrong-branch frequency <= (1 - lambda_min)^T + 3 sigma; F(rho, G(rho)) >= max_alpha p_alpha",
    "<=",
    {"T": [8], "trials": 50, "samples": 4000},
    _run_projective,
)
_register("conjugate_exactness", "conjugate-basis emulation has fidelity 1 within 1e-9", "~", {"trials": 100}, _run_conjugate)
_register(
    "delta_robustness",
    "error vs perturbation size fits a line through the ideal error with R^2 >= 0.9",
    ">=",
    {"T": [5], "delta": [0.01, 0.02, 0.04, 0.08], "trials": 5},
    _run_delta,
)
_register(
    "representation_equivalence",
    "FULL and COMPACT ancilla registers agree after step (i) within 1e-10",
    "<=",
    {"T": [1, 2, 3, 4, 5, 6], "trials": 50},
    _run_representation,
)
_register(
    "error_budget",
    "noisy-reflection error <= (4T+1) eps_ref + eps_id + 0.05",
    "<=",
    {"T": [3], "n": [64, 256], "trials": 10},
    _run_budget,
)
_register(
    "controlled_unitary",
    "emulated controlled unitary: fidelity >= p_erase with the phase fixed by the extra sample",
    ">=",
    {"T": [4, 5, 6], "trials": 10},
    _run_controlled,
)


def run_experiment(cfg: ExperimentConfig) -> list:
    """Run ``cfg`` and return its rows in parameter order."""
    entry = EXPERIMENTS.get(cfg.experiment)
    if entry is None:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    return entry.runner(cfg)


def list_experiments() -> list:
    return [(name, entry.description) for name, entry in EXPERIMENTS.items()]


def row_relation(row: ResultRow) -> str:
    return EXPERIMENT_RELATIONS_OVERRIDE.get((row.experiment, row.params.get("check")), EXPERIMENTS[row.experiment].relation)
