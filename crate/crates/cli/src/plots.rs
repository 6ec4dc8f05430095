//! Standalone matplotlib scripts that read traces through `manifest.json`.

macro_rules! prelude {
    () => {
        r##"#!/usr/bin/env python3
import csv
import json
import math
import os
import sys

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(path):
    with open(os.path.join(HERE, path)) as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    header = rows[0][1:]
    cols = {name: [] for name in header}
    for row in rows[1:]:
        for name, cell in zip(header, row[1:]):
            cols[name].append(float(cell))
    return cols


def grid():
    with open(os.path.join(HERE, "manifest.json")) as fh:
        manifest = json.load(fh)
    params = {p["index"]: p["parameters"] for p in manifest["points"]}
    traces = [f for f in manifest["files"] if f["kind"] == "trace"]
    rows = sorted({params[f["point"]].get("couplingRatio", 0.0) for f in traces})
    cols = sorted({params[f["point"]].get("driveFrequency", 0.0) for f in traces})
    fig, axes = plt.subplots(len(rows), len(cols), squeeze=False, sharex=True,
                             figsize=(4 * len(cols), 3 * len(rows)))
    for f in traces:
        p = params[f["point"]]
        ax = axes[rows.index(p.get("couplingRatio", 0.0))][cols.index(p.get("driveFrequency", 0.0))]
        label = f'{f["method"]} T={p.get("temperature", "base")}'
        yield ax, load(f["path"]), label
    for r, eta in enumerate(rows):
        for c, wd in enumerate(cols):
            axes[r][c].set_title(f"eta={eta}, drive={wd}")
            axes[r][c].set_xlabel("t (ns)")
    fig.tight_layout()
    out = os.path.join(HERE, os.path.splitext(os.path.basename(sys.argv[0]))[0] + ".png")
    fig.savefig(out, dpi=150)
    print(out)
"##
    };
}

pub const SCRIPTS: [(&str, &str); 3] = [
    (
        "plot_field.py",
        concat!(
            prelude!(),
            r#"

for ax, data, label in grid():
    amp = [math.hypot(re, im) for re, im in zip(data["re_a_0"], data["im_a_0"])]
    ax.plot(data["t"], amp, label=label)
    ax.set_ylabel("|<a>|")
    ax.legend(fontsize="small")
"#
        ),
    ),
    (
        "plot_occupation.py",
        concat!(
            prelude!(),
            r#"

for ax, data, label in grid():
    ax.plot(data["t"], data["n_0"], label=f"n {label}")
    ax.plot(data["t"], data["v_0"], linestyle="--", label=f"v {label}")
    ax.set_yscale("symlog", linthresh=1e-3)
    ax.legend(fontsize="small")
"#
        ),
    ),
    (
        "plot_currents.py",
        concat!(
            prelude!(),
            r#"

for ax, data, label in grid():
    for name in (k for k in data if k.startswith("I_")):
        ax.plot(data["t"], data[name], label=f"{name[2:]} {label}")
    ax.set_ylabel("photocurrent")
    ax.legend(fontsize="small")
"#
        ),
    ),
];
