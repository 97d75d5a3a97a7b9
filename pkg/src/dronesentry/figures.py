"""Figure rendering for the report paths.

The eval command writes recall/false-positive bar charts next to its JSON
and text tables; the bench command writes per-detector timing boxplots next
to its CSV. Everything renders headless to files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .detectors import DETECTOR_NAMES  # noqa: E402

FUSION_COLORS = {"combined": "#2a6f97", "rules_only": "#61a5c2", "ensemble_only": "#a9d6e5"}


def save_recall_bars(report, path):
    """Grouped bars of recall per suite for the three fusion variants."""
    suites = [name for name, res in report.suites.items()
              if res.combined.recall is not None]
    variants = ["combined", "rules_only", "ensemble_only"]
    width = 0.27
    xs = np.arange(len(suites))
    fig, ax = plt.subplots(figsize=(9, 4.2))
    for i, variant in enumerate(variants):
        values = [
            100.0 * getattr(report.suites[s], variant).recall for s in suites
        ]
        ax.bar(xs + (i - 1) * width, values, width,
               label=variant.replace("_", " "), color=FUSION_COLORS[variant])
    ax.set_xticks(xs)
    ax.set_xticklabels(suites, rotation=20, ha="right")
    ax.set_ylabel("recall (%)")
    ax.set_ylim(0, 105)
    ax.legend(loc="lower right")
    ax.set_title("Per-suite recall by fusion configuration")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_fpr_bars(report, path):
    """False-positive rates on the clean suites per fusion variant."""
    suites = [name for name, res in report.suites.items()
              if res.combined.false_positive_rate is not None]
    variants = ["combined", "rules_only", "ensemble_only"]
    width = 0.27
    xs = np.arange(len(suites))
    fig, ax = plt.subplots(figsize=(6, 3.6))
    for i, variant in enumerate(variants):
        values = [
            100.0 * getattr(report.suites[s], variant).false_positive_rate
            for s in suites
        ]
        ax.bar(xs + (i - 1) * width, values, width,
               label=variant.replace("_", " "), color=FUSION_COLORS[variant])
    ax.set_xticks(xs)
    ax.set_xticklabels(suites, rotation=15, ha="right")
    ax.set_ylabel("false positives (%)")
    ax.legend()
    ax.set_title("False-positive rate on clean data")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_timing_boxplots(timing_report, path, include_optics=True):
    """Boxplots of per-point prediction times, one box per component."""
    names = [n for n in DETECTOR_NAMES if include_optics or n != "optics"]
    names = ["rules"] + names
    data = [1000.0 * np.asarray(timing_report.samples[n]) for n in names]
    fig, ax = plt.subplots(figsize=(7, 3.8))
    ax.boxplot(data, tick_labels=names, showfliers=False)
    ax.set_ylabel("per-point time (ms)")
    ax.set_yscale("log")
    ax.set_title("Per-point prediction time")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
