"""File-producing drivers behind the command-line subcommands."""
from __future__ import annotations

import copy
import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import catstates, cs_algebra, fock, gutzwiller, mf_dynamics
from .config import CatConfig, DualConfig, RunConfig, WeightsConfig, to_complex
from .cs_algebra import GlauberState, SuMState
from .integrator import IntegrationError, Trajectory, integrate

log = logging.getLogger(__name__)

CSV_FORMAT = "%.17g"


@dataclass
class PreparedRun:
    """Initial vector, right-hand side and monitor closures for one scheme."""

    initial: np.ndarray
    rhs: object
    monitors: dict
    columns: list
    reference: dict


def _plane_wave_z(cfg: RunConfig, default_A: complex) -> np.ndarray:
    p = cfg.initial.preset
    A = default_A if p.A is None else complex(*to_complex([p.A]))
    return mf_dynamics.plane_wave(cfg.model.M, p.k, A, cfg.params, scheme="dnls").z


def _localized_vec(M: int, site: int, amplitude: complex) -> np.ndarray:
    if site > M:
        raise ValueError(f"localized site {site} outside 1..{M}")
    v = np.zeros(M, dtype=complex)
    v[site - 1] = amplitude
    return v


def _site_columns(M: int, prefix: str = "site") -> list:
    return [f"{prefix}_{j}" for j in range(1, M + 1)]


def prepare(cfg: RunConfig) -> PreparedRun:
    params = cfg.params
    init = cfg.initial
    M = cfg.model.M
    preset = init.preset
    columns = ["energy", "N_bar"] + _site_columns(M)

    if cfg.scheme in ("dnls", "sum"):
        if cfg.scheme == "dnls":
            if init.z is not None:
                z = to_complex(init.z)
            elif preset.name == "plane_wave":
                z = _plane_wave_z(cfg, 1.0)
            else:
                z = _localized_vec(M, preset.site, complex(*to_complex([preset.amplitude])))
            mf_dynamics.DnlsState(z)
            U_eff = params.U
        else:
            N = init.N
            if init.xi is not None:
                xi = SuMState(N, to_complex(init.xi)).xi
            elif preset.name == "plane_wave":
                xi = _plane_wave_z(cfg, 1.0) / math.sqrt(M)
            else:
                xi = _localized_vec(M, preset.site, 1.0)
            z = mf_dynamics.PsiState.from_xi(N, xi).psi
            U_eff = mf_dynamics.u_eff_sum(params.U, N)
        T = params.T
        monitors = {
            "energy": lambda y: mf_dynamics.kernel_energy(y, U_eff, T),
            "N_bar": lambda y: float(np.vdot(y, y).real),
        }
        for j in range(M):
            monitors[f"site_{j + 1}"] = lambda y, j=j: float(abs(y[j]) ** 2)
        rhs = lambda y: mf_dynamics.kernel_rhs(y, U_eff, T)  # noqa: E731
        return PreparedRun(z, rhs, monitors, columns, {})

    if cfg.scheme == "gutzwiller":
        if init.f is not None:
            state = gutzwiller.GutzwillerState(np.array([to_complex(row) for row in init.f]))
            state.check_normalized()
        elif init.occupation is not None:
            n_max = init.n_max or gutzwiller.default_n_max(sum(init.occupation), M)
            state = gutzwiller.GutzwillerState.fock_product(init.occupation, n_max)
        else:
            if init.z is not None:
                z = to_complex(init.z)
            elif preset.name == "plane_wave":
                z = _plane_wave_z(cfg, 1.0)
            else:
                z = _localized_vec(M, preset.site, complex(*to_complex([preset.amplitude])))
            state = gutzwiller.coherent_embed(GlauberState(z), init.n_max)
        n = np.arange(state.n_max + 1)
        U, T = params.U, params.T
        monitors = {
            "energy": lambda y: gutzwiller.energy_F(gutzwiller.GutzwillerState(y), params),
            "N_bar": lambda y: float(np.sum(np.abs(y) ** 2 * n)),
        }
        for j in range(M):
            monitors[f"site_{j + 1}"] = lambda y, j=j: float(np.abs(y[j]) ** 2 @ n)
        for j in range(M):
            monitors[f"I_{j + 1}"] = lambda y, j=j: float(np.sum(np.abs(y[j]) ** 2))
        columns = columns + _site_columns(M, "I")
        return PreparedRun(state.f, gutzwiller.make_rhs(params), monitors, columns, {"U": U, "T": T})

    # exact sector evolution
    if init.occupation is not None:
        N = sum(init.occupation)
        basis = fock.enumerate_sector(M, N)
        psi = fock.basis_vector(basis, init.occupation).amps
    else:
        N = init.N
        basis = fock.enumerate_sector(M, N)
        if init.xi is not None:
            xi = to_complex(init.xi)
        elif preset.name == "plane_wave":
            xi = _plane_wave_z(cfg, 1.0) / math.sqrt(M)
        else:
            xi = _localized_vec(M, preset.site, 1.0)
        psi = cs_algebra.sum_fock_amplitudes(SuMState(N, xi), basis).amps
    H = fock.build_bh_matrix(params, basis)
    occ = basis.states.astype(float)
    monitors = {
        "energy": lambda y: float(np.vdot(y, H @ y).real),
        "N_bar": lambda y: float(N * np.vdot(y, y).real),
    }
    for j in range(M):
        monitors[f"site_{j + 1}"] = lambda y, j=j: float(np.abs(y) ** 2 @ occ[:, j])
    return PreparedRun(psi, None, monitors, columns, {"H": H, "basis": basis})


def _exact_trajectory(prep: PreparedRun, cfg: RunConfig) -> Trajectory:
    icfg = cfg.integrator.build()
    steps = icfg.step_sizes()
    prop = fock.Propagator(prep.reference["H"])
    traj = Trajectory()
    traj._record(0.0, prep.initial, prep.monitors)
    for i in range(1, len(steps) + 1):
        if i % icfg.record_every == 0 or i == len(steps):
            t = icfg.t_end if i == len(steps) else i * icfg.dt
            traj._record(t, prop(prep.initial, t), prep.monitors)
    return traj


def write_csv(path: Path, traj: Trajectory, columns: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time"] + columns)
        for i, t in enumerate(traj.times):
            w.writerow([CSV_FORMAT % t] + [CSV_FORMAT % traj.monitors[c][i] for c in columns])


def _pairs(a: np.ndarray):
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _drifts(traj: Trajectory, columns: list) -> dict:
    out = {
        "energy": float(np.max(np.abs(traj.series("energy") - traj.series("energy")[0]))),
        "N_bar": float(np.max(np.abs(traj.series("N_bar") - traj.series("N_bar")[0]))),
    }
    I_cols = [c for c in columns if c.startswith("I_")]
    if I_cols:
        out["I_max"] = float(max(np.max(np.abs(traj.series(c) - 1.0)) for c in I_cols))
    return out


def run_evolution(cfg: RunConfig) -> dict:
    """Integrate the configured scheme and write the CSV, summary and optional snapshots."""
    start = time.perf_counter()
    prep = prepare(cfg)
    out = cfg.outputs
    status, error = "ok", None
    try:
        if cfg.scheme == "exact":
            traj = _exact_trajectory(prep, cfg)
        else:
            traj = integrate(prep.rhs, prep.initial, cfg.integrator.build(), prep.monitors)
    except IntegrationError as err:
        traj, status = err.trajectory, "failed"
        error = {"message": str(err), "last_good_time": err.last_good_time}
        log.error("integration aborted: %s", err)
    csv_path = out.path(out.csv)
    write_csv(csv_path, traj, prep.columns)
    if out.snapshots:
        with open(out.path(out.snapshots), "w") as fh:
            for t, y in zip(traj.times, traj.snapshots):
                fh.write(json.dumps({"time": t, "state": _pairs(np.asarray(y))}) + "\n")
    summary = {
        "scheme": cfg.scheme,
        "M": cfg.model.M,
        "U": cfg.model.U,
        "status": status,
        "error": error,
        "t_final": traj.times[-1],
        "records": len(traj.times),
        "drift": _drifts(traj, prep.columns),
        "final": {c: traj.monitors[c][-1] for c in prep.columns},
        "csv": str(csv_path),
        "wall_time_s": time.perf_counter() - start,
    }
    with open(out.path(out.summary), "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def _set_key(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def sweep_configs(base: dict, key: str, values: list) -> list[RunConfig]:
    """One validated config per value, each writing into its own ``run_XXX`` subdirectory."""
    from .config import _check_run

    cfgs = []
    base_dir = base.get("outputs", {}).get("dir", "bhvar_out")
    for i, v in enumerate(values):
        data = copy.deepcopy(base)
        _set_key(data, key, v)
        _set_key(data, "outputs.dir", str(Path(base_dir) / f"run_{i:03d}"))
        cfg = RunConfig.model_validate(data)
        _check_run(cfg, None)
        cfgs.append(cfg)
    return cfgs


def run_sweep(cfgs: list[RunConfig], jobs: int = 1) -> list[dict]:
    if jobs <= 1:
        return [run_evolution(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_evolution, cfgs))


def run_cat(cfg: CatConfig) -> dict:
    spec = cfg.cat
    family = catstates.build_localized_family(spec.M, spec.N, spec.epsilon, spec.seed)
    basis = fock.enumerate_sector(spec.M, spec.N)
    ks = spec.k or list(range(1, spec.M + 1))
    cats = {k: catstates.build_cat(family, k) for k in ks}
    vecs = {k: catstates.cat_vector(c, basis) for k, c in cats.items()}
    overlap = max(abs(vecs[q].inner(vecs[k]) - (q == k)) for q in ks for k in ks)
    entries = []
    for k, cat in cats.items():
        obs = catstates.cat_observables(cat, basis)
        amps = catstates.cat_momentum_amplitudes(cat, basis)
        weights = catstates.class_weights(amps, spec.M)
        entries.append({
            "k": k,
            "norm": obs.norm,
            "n_i": obs.n_i.tolist(),
            "class_weights": weights.tolist(),
            "out_of_class_weight": float(weights.sum() - weights[k % spec.M]),
        })
    report = {
        "M": spec.M,
        "N": spec.N,
        "epsilon": spec.epsilon,
        "seed": spec.seed,
        "gram_residual": family.gram_residual(),
        "min_diagonal_weight": float(family.diagonal_weights().min()),
        "cat_overlap_residual": float(overlap),
        "cats": entries,
    }
    _write_json(cfg.output, report)
    return report


def run_weights(cfg: WeightsConfig) -> dict:
    spec = cfg.weights
    z = GlauberState(to_complex(spec.z))
    N_bar = z.N_bar
    if spec.zeta is not None:
        zeta = to_complex(spec.zeta)
        zeta = SuMState(0, zeta).xi
    elif N_bar > 0:
        zeta = z.z / math.sqrt(N_bar)
    else:
        zeta = _localized_vec(z.M, 1, 1.0)
    S_max = spec.S_max if spec.S_max is not None else cs_algebra.sector_cutoff(N_bar)
    w = np.array([cs_algebra.glauber_sector_weight(z, zeta, L) for L in range(S_max + 1)])
    report = {
        "N_bar": N_bar,
        "S_max": S_max,
        "tail_bound": cs_algebra.poisson_tail(N_bar, S_max),
        "weights": _pairs(w),
        "abs_weights": np.abs(w).tolist(),
        "peak_L": int(np.argmax(np.abs(w))),
        "total": float(np.sum(np.abs(w) ** 2)),
    }
    _write_json(cfg.output, report)
    return report


def run_dual(cfg: DualConfig) -> dict:
    spec = cfg.dual
    report = {}
    if spec.z is not None:
        z = to_complex(spec.z)
        v = cs_algebra.mode_fourier(z)
        report["glauber"] = {"z": _pairs(z), "v": _pairs(v), "N_bar": float(np.vdot(z, z).real)}
    if spec.xi is not None:
        if spec.N is None:
            raise ValueError("dual.N is required together with dual.xi")
        state = SuMState(spec.N, to_complex(spec.xi))
        basis = fock.enumerate_sector(state.M, state.N)
        alpha = cs_algebra.mode_fourier(state.xi)
        R = fock.momentum_transform(basis)
        site = cs_algebra.sum_fock_amplitudes(state, basis).amps
        mom = cs_algebra.momentum_fock_amplitudes(state, basis).amps
        report["suM"] = {
            "N": state.N,
            "xi": _pairs(state.xi),
            "alpha": _pairs(alpha),
            "duality_residual": float(np.max(np.abs(R.conj().T @ site - mom))),
        }
    if not report:
        raise ValueError("dual config needs z or xi")
    _write_json(cfg.output, report)
    return report


def _write_json(path, data) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w") as fh:
        json.dump(data, fh, indent=2)
