"""SVG figures for experiment reports.

Output is made reproducible by fixing ``svg.hashsalt`` and dropping the
date from the SVG metadata.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import IoError  # noqa: E402

_RC = {
    "svg.hashsalt": "mellin-deconv",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
_META = {"Date": None, "Creator": None}


def _save(fig, path):
    try:
        fig.savefig(path, format="svg", metadata=_META)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def overlay_plot(path, x, curves, truth, title=""):
    """Estimated densities in grey with the true density on top."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for c in curves:
            ax.plot(x, c, color="0.6", lw=0.6, alpha=0.6)
        ax.plot(x, truth, color="k", lw=1.8, label="true density")
        ax.set_xlabel("x")
        ax.set_ylabel("density")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def loss_boxplot(path, n_values, losses, title=""):
    """Box plot of sup-losses per sample size; whiskers at 1.5 IQR."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        data = [np.asarray(losses[n]) for n in n_values]
        if any(d.size for d in data):
            ax.boxplot(data, whis=1.5, tick_labels=[str(n) for n in n_values])
        ax.set_xlabel("n")
        ax.set_ylabel("sup-loss")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
