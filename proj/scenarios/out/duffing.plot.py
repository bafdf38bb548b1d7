#!/usr/bin/env python3
# Regenerate the figure from the trajectory CSVs next to this script.
import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
SERIES = [
    ("duffing", "duffing.csv"),
]
TITLE = "duffing"


def load(path):
    with open(os.path.join(HERE, path), newline="") as f:
        rows = list(csv.reader(f))
    head = rows[0]
    return {name: [float(r[i]) for r in rows[1:]] for i, name in enumerate(head)}


def main():
    fig, ax = plt.subplots(2, 2, figsize=(11, 7), sharex=True)
    for label, path in SERIES:
        d = load(path)
        t = d["t"]
        ax[0][0].plot(t, d["log10_abs_omega"], label=label)
        ax[0][1].plot(t, d["errtheta"], label=label)
        ax[1][0].plot(t, d["theta1hat"], label=label + " theta1")
        ax[1][0].plot(t, d["theta2hat"], "--", label=label + " theta2")
        ax[1][1].plot(t, d["errx"], label=label)
    ax[0][0].set_ylabel("log10 |omega|")
    ax[0][1].set_ylabel("|theta error|")
    ax[0][1].set_yscale("log")
    ax[1][0].set_ylabel("theta estimate")
    ax[1][1].set_ylabel("|state error|")
    ax[1][1].set_yscale("log")
    for a in ax.flat:
        a.grid(True, alpha=0.3)
        a.legend(fontsize=7)
    for a in ax[1]:
        a.set_xlabel("t [s]")
    fig.suptitle(TITLE)
    fig.tight_layout()
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.splitext(os.path.abspath(__file__))[0] + ".png"
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
