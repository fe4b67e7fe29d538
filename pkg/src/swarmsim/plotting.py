"""Static plot rendering from telemetry records.

Each renderer draws one figure from one record kind and is skipped when
the run produced no such records, so the same entry point serves every
scenario shape.
"""

import math
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .kernel import NS_PER_S


def _by_source(records, kind):
    series = defaultdict(list)
    for rec in records:
        if rec["kind"] == kind:
            series[rec["source"]].append(rec)
    return series


def plot_heap(records, path):
    series = _by_source(records, "heap")
    if not series:
        return False
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for source in sorted(series):
        t = [r["t"] / NS_PER_S for r in series[source]]
        resting = [r["payload"]["resting"] / 1024 for r in series[source]]
        transient = [r["payload"]["transient"] / 1024
                     for r in series[source]]
        ax.step(t, resting, where="post", label=f"{source} resting")
        ax.step(t, transient, where="post", linestyle="--",
                label=f"{source} transient peak")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("heap [kB]")
    ax.set_title("process heap usage")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return True


def plot_trajectory(records, path):
    series = _by_source(records, "trajectory")
    if not series:
        return False
    fig, ax = plt.subplots(figsize=(6, 6))
    for source in sorted(series):
        xs = [r["payload"]["position"][0] / 1000 for r in series[source]]
        ys = [r["payload"]["position"][1] / 1000 for r in series[source]]
        ax.plot(xs, ys, label=source)
    ax.set_xlabel("x [km]")
    ax.set_ylabel("y [km]")
    ax.set_title("trajectories")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return True


def plot_nav_error(records, path):
    """Relative estimate error against truth where both exist, else the
    raw relative separation estimates."""
    truth = defaultdict(dict)
    for rec in records:
        if rec["kind"] == "truth":
            truth[rec["source"]][rec["t"]] = rec["payload"]["position"]
    obs = _by_source(records, "observation")
    if not obs:
        return False
    peers = _guess_peers(obs, truth)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for source in sorted(obs):
        t, y = [], []
        peer = peers.get(source)
        for rec in obs[source]:
            epoch = rec["payload"].get("epoch")
            rel = rec["payload"].get("relative")
            if rel is None or epoch is None:
                continue
            own = truth.get(source, {}).get(epoch)
            other = truth.get(peer, {}).get(epoch) if peer else None
            if own is not None and other is not None:
                err = math.sqrt(sum(
                    (e - (o - s)) ** 2
                    for e, o, s in zip(rel, other, own)))
                y.append(err)
            else:
                y.append(math.sqrt(sum(c * c for c in rel)))
            t.append(rec["t"] / NS_PER_S)
        if t:
            ax.plot(t, y, ".", markersize=3, label=source)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("relative estimate [m]")
    ax.set_title("relative navigation")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return True


def _guess_peers(obs, truth):
    # an observer's peer is the other source that has truth records;
    # only resolvable for two-party runs, otherwise raw estimates plot
    sources = sorted(truth)
    if len(sources) != 2:
        return {}
    return {sources[0]: sources[1], sources[1]: sources[0]}


def render_all(records, out_dir) -> list:
    """Render every applicable figure; returns the files written."""
    written = []
    for name, renderer in (("heap_usage.png", plot_heap),
                           ("trajectory.png", plot_trajectory),
                           ("nav_error.png", plot_nav_error)):
        path = os.path.join(out_dir, name)
        if renderer(records, path):
            written.append(path)
    return written
