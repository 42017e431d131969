"""Campaign harness: the three drop-test sweeps (polar velocity envelope,
noise success-rate map, angular-perturbation limits), CSV/SVG artifacts.

Every drop gets its own seed derived from (root seed, cell key), so results do
not depend on scheduling: cells are computed by a worker pool but the tables
are assembled and written in key order. Sweeps are resumable; cells already
present in the output CSV are not recomputed.
"""
import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .config import NoiseSpec, RunConfig
from .sim import DropScenario, run_drop


def _cell_seed(root_seed, *key):
    """Stable per-cell seed; key entries are small non-negative ints."""
    return int(np.random.SeedSequence([int(root_seed)] + [int(k) for k in key])
               .generate_state(1)[0])


def _read_csv(path):
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_csv(path, fieldnames, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# polar envelope

def _envelope_cell(args):
    """Largest nu that still lands, scanning outward until the first failure."""
    cfg, height, hi, psi, pi_, naive, root_seed = args
    nu_grid = np.arange(0.0, cfg.grids.polar_nu_max + 1e-9, cfg.grids.polar_nu_step)
    best = -1.0
    for ni, nu in enumerate(nu_grid):
        seed = _cell_seed(root_seed, 1, hi, pi_, int(naive), ni)
        scen = DropScenario.from_polar(height, nu, psi, seed=seed)
        out = run_drop(cfg, scen, naive=naive)
        if not out.success:
            break
        best = nu
    return best


def sweep_polar(cfg: RunConfig, out_dir, progress=None):
    """Paired LC / naive velocity envelopes; returns the table rows.

    CSV columns: height, psi_rad, nu_max_lc, nu_max_naive. A value of -1
    marks a cell whose nu = 0 drop already fails.
    """
    grids = cfg.grids
    psis = [2.0 * math.pi * i / grids.polar_psi_count
            for i in range(grids.polar_psi_count)]
    path = os.path.join(out_dir, "envelope.csv")
    fields = ["height", "psi_rad", "nu_max_lc", "nu_max_naive"]
    done = {(r["height"], r["psi_rad"]): r for r in _read_csv(path)}

    keys, jobs = [], []
    for hi, height in enumerate(grids.polar_heights):
        for pi_, psi in enumerate(psis):
            key = (f"{height:.6g}", f"{psi:.10g}")
            keys.append((key, height, psi))
            if key in done:
                continue
            for naive in (False, True):
                jobs.append((key, naive,
                             (cfg, height, hi, psi, pi_, naive, cfg.seed)))

    def complete():
        return [done[k] for k, _, _ in keys
                if k in done and len(done[k]) == len(fields)]

    for (key, naive), nu in _run_jobs(cfg.workers, _envelope_cell, jobs, progress):
        row = done.setdefault(key, {"height": key[0], "psi_rad": key[1]})
        row["nu_max_naive" if naive else "nu_max_lc"] = f"{nu:.6g}"
        if len(row) == len(fields):
            _write_csv(path, fields, complete())

    rows = complete()
    _write_csv(path, fields, rows)
    _plot_polar(rows, grids.polar_heights, os.path.join(out_dir, "envelope.svg"))
    return rows


def _plot_polar(rows, heights, path):
    fig, axes = plt.subplots(1, len(heights), figsize=(5 * len(heights), 5),
                             subplot_kw={"projection": "polar"})
    axes = np.atleast_1d(axes)
    for ax, height in zip(axes, heights):
        hkey = f"{height:.6g}"
        sub = [r for r in rows if r["height"] == hkey]
        if not sub:
            continue
        psi = [float(r["psi_rad"]) for r in sub]
        for col, style, label in (("nu_max_lc", "-o", "reactive"),
                                  ("nu_max_naive", "--s", "baseline")):
            val = [max(float(r.get(col, -1) or -1), 0.0) for r in sub]
            ax.plot(psi + psi[:1], val + val[:1], style, label=label)
        ax.set_title(f"h = {height} m")
    axes[0].legend(loc="lower left")
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------
# noise success map

def _noise_cell(args):
    cfg, vx, xi, vy, yi, noise, batch, root_seed = args
    n_ok = 0
    for b in range(batch):
        seed = _cell_seed(root_seed, 2, xi, yi, b)
        scen = DropScenario(height=cfg.grids.noise_height, vx=vx, vy=vy, seed=seed)
        out = run_drop(cfg, scen, noise=noise)
        n_ok += int(out.success)
    return n_ok


def sweep_noise(cfg: RunConfig, out_dir, progress=None):
    """Success rate per velocity cell under sensor noise (CSV: vx, vy, rate, n)."""
    grids = cfg.grids
    noise = NoiseSpec(sigma_qdot=grids.noise_sigma_qdot,
                      sigma_tau=grids.noise_sigma_tau,
                      sigma_v0=grids.noise_sigma_v0)
    vgrid = np.arange(0.0, grids.noise_v_max + 1e-9, grids.noise_v_step)
    path = os.path.join(out_dir, "success_map.csv")
    fields = ["vx", "vy", "rate", "n"]
    done = {(r["vx"], r["vy"]): r for r in _read_csv(path)}

    keys, jobs = [], []
    for xi, vx in enumerate(vgrid):
        for yi, vy in enumerate(vgrid):
            key = (f"{vx:.6g}", f"{vy:.6g}")
            keys.append(key)
            if key in done:
                continue
            jobs.append((key, None, (cfg, vx, xi, vy, yi, noise,
                                     grids.noise_batch, cfg.seed)))

    for (key, _), n_ok in _run_jobs(cfg.workers, _noise_cell, jobs, progress):
        done[key] = {"vx": key[0], "vy": key[1],
                     "rate": f"{n_ok / grids.noise_batch:.6g}",
                     "n": str(grids.noise_batch)}
        _write_csv(path, fields, [done[k] for k in keys if k in done])

    rows = [done[k] for k in keys if k in done]
    _write_csv(path, fields, rows)
    _plot_heatmap(rows, vgrid, os.path.join(out_dir, "success_map.svg"))
    return rows


def _plot_heatmap(rows, vgrid, path):
    n = len(vgrid)
    grid = np.full((n, n), np.nan)
    index = {f"{v:.6g}": i for i, v in enumerate(vgrid)}
    for r in rows:
        grid[index[r["vy"]], index[r["vx"]]] = float(r["rate"])
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(grid, origin="lower", vmin=0.0, vmax=1.0, cmap="RdYlGn",
                   extent=[vgrid[0], vgrid[-1], vgrid[0], vgrid[-1]])
    ax.set_xlabel("vx [m/s]")
    ax.set_ylabel("vy [m/s]")
    fig.colorbar(im, ax=ax, label="success rate")
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------
# angular perturbation limits

ANGULAR_AXES = (
    ("roll", "deg"), ("pitch", "deg"),
    ("roll_rate", "deg/s"), ("pitch_rate", "deg/s"), ("yaw_rate", "deg/s"),
)


def _angular_limit(args):
    """Last tolerated value scanning one axis in one direction."""
    cfg, ai, axis, unit, sign, root_seed = args
    grids = cfg.grids
    if unit == "deg":
        step, vmax = grids.angular_angle_step_deg, grids.angular_angle_max_deg
    else:
        step, vmax = grids.angular_rate_step_deg, grids.angular_rate_max_deg
    limit = 0.0
    k = 1
    while k * step <= vmax + 1e-9:
        value = sign * k * step
        seed = _cell_seed(root_seed, 3, ai, 0 if sign > 0 else 1, k)
        scen = DropScenario(height=grids.angular_height, vx=grids.angular_vx,
                            seed=seed, **{axis: math.radians(value)})
        out = run_drop(cfg, scen)
        if not out.success:
            break
        limit = k * step
        k += 1
    return limit


def sweep_angular(cfg: RunConfig, out_dir, progress=None):
    """Tolerated attitude / angular-rate interval per axis
    (CSV: axis, min, max, unit)."""
    path = os.path.join(out_dir, "angular_limits.csv")
    fields = ["axis", "min", "max", "unit"]
    done = {r["axis"]: r for r in _read_csv(path)}

    jobs = []
    for ai, (axis, unit) in enumerate(ANGULAR_AXES):
        if axis in done:
            continue
        for sign in (1.0, -1.0):
            jobs.append(((axis, unit), sign, (cfg, ai, axis, unit, sign, cfg.seed)))

    def complete():
        return [done[a] for a, _ in ANGULAR_AXES
                if a in done and len(done[a]) == len(fields)]

    for ((axis, unit), sign), limit in _run_jobs(cfg.workers, _angular_limit, jobs, progress):
        row = done.setdefault(axis, {"axis": axis, "unit": unit})
        row["max" if sign > 0 else "min"] = f"{sign * limit:.6g}"
        if len(row) == len(fields):
            _write_csv(path, fields, complete())

    rows = complete()
    _write_csv(path, fields, rows)
    _plot_angular(rows, os.path.join(out_dir, "angular_limits.svg"))
    return rows


def _plot_angular(rows, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    names = [r["axis"] for r in rows]
    lo = np.array([float(r["min"]) for r in rows])
    hi = np.array([float(r["max"]) for r in rows])
    y = np.arange(len(rows))
    ax.barh(y, hi - lo, left=lo, height=0.5, color="tab:blue", alpha=0.7)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_yticks(y, [f"{n} [{r['unit']}]" for n, r in zip(names, rows)])
    ax.set_xlabel("tolerated interval")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------

def _run_jobs(workers, fn, jobs, progress=None):
    """Yield ((key, subkey), value) in job order; results are seed-determined,
    so the assembled tables do not depend on the worker count."""
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (key, sub, _), value in zip(jobs, pool.map(fn, [j[2] for j in jobs])):
                if progress:
                    progress(key, sub, value)
                yield (key, sub), value
    else:
        for key, sub, args in jobs:
            value = fn(args)
            if progress:
                progress(key, sub, value)
            yield (key, sub), value
