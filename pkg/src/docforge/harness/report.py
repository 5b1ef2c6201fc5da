"""Evaluation report container and renderers (CSV, text, plots)."""

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class EvalRow:
    dataset: str
    code: str
    spec: dict                 # the exact distortion spec this row came from
    n_images: int
    precision: float
    recall: float
    f1: float
    pixel_precision: float
    pixel_recall: float
    pixel_f1: float
    mean_align_score: float


@dataclass
class MetricsReport:
    corpus_hash: str
    rows: list[EvalRow] = field(default_factory=list)
    far: dict | None = None
    delta_sc: dict | None = None
    agm: dict | None = None
    histograms: dict | None = None
    gate_table: dict | None = None
    ablation: list | None = None

    def row(self, code: str) -> EvalRow:
        for r in self.rows:
            if r.code == code:
                return r
        raise KeyError(code)

    def to_json(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=1, sort_keys=True))
        return path

    @staticmethod
    def from_json(path) -> "MetricsReport":
        raw = json.loads(Path(path).read_text())
        rows = [EvalRow(**r) for r in raw.pop("rows", [])]
        return MetricsReport(rows=rows, **raw)

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fields = ["dataset", "code", "n_images", "precision", "recall", "f1",
                  "pixel_precision", "pixel_recall", "pixel_f1",
                  "mean_align_score", "corpus_hash"]
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=fields)
            w.writeheader()
            for r in self.rows:
                d = asdict(r)
                d.pop("spec")
                w.writerow({**d, "corpus_hash": self.corpus_hash})
        return path

    def to_text(self) -> str:
        lines = [f"corpus {self.corpus_hash[:12]}"]
        if self.rows:
            lines.append(f"{'code':<10}{'P':>7}{'R':>7}{'F1':>7}{'pixF1':>8}{'s_aln':>7}")
            for r in self.rows:
                lines.append(f"{r.code:<10}{r.precision:>7.3f}{r.recall:>7.3f}"
                             f"{r.f1:>7.3f}{r.pixel_f1:>8.3f}{r.mean_align_score:>7.3f}")
        if self.far:
            lines.append(f"FAR={self.far['far']:.4f} "
                         f"pixel_fp={self.far['pixel_fp_rate']:.5f} "
                         f"(tau={self.far['tau']}, n={self.far['n_images']})")
        if self.delta_sc:
            lines.append(f"delta_sc={self.delta_sc['delta_sc']:.4f} "
                         f"(n={self.delta_sc['n_used']}, skipped={self.delta_sc['n_skipped']})")
        if self.gate_table:
            codes = sorted(next(iter(self.gate_table.values())).keys())
            lines.append("gate ablation (F1):")
            for mode, vals in self.gate_table.items():
                row = " ".join(f"{c}={vals[c]:.3f}" for c in codes)
                lines.append(f"  {mode:<9} {row}")
        if self.ablation:
            lines.append("ablation (battery-average F1):")
            for entry in self.ablation:
                lines.append(f"  {entry['variant']:<14} avg={entry['avg_f1']:.3f}")
        return "\n".join(lines)

    def render_plots(self, out_dir) -> list[Path]:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if self.rows:
            fig, ax = plt.subplots(figsize=(7, 3.2))
            codes = [r.code for r in self.rows]
            ax.bar(codes, [r.f1 for r in self.rows], color="#4477aa")
            ax.set_ylabel("F1")
            ax.set_ylim(0, 1)
            ax.set_title("localization under distortion")
            plt.xticks(rotation=45, ha="right")
            fig.tight_layout()
            p = out / "battery_f1.png"
            fig.savefig(p, dpi=120)
            plt.close(fig)
            written.append(p)
        if self.histograms:
            fig, ax = plt.subplots(figsize=(6, 3.2))
            for code, hist in self.histograms.items():
                centers = [(a + b) / 2 for a, b in zip(hist["edges"][:-1],
                                                       hist["edges"][1:])]
                ax.plot(centers, hist["counts"], marker="o", label=code)
            ax.set_xlabel("alignment score")
            ax.set_ylabel("count")
            ax.legend(fontsize=7)
            fig.tight_layout()
            p = out / "score_histograms.png"
            fig.savefig(p, dpi=120)
            plt.close(fig)
            written.append(p)
        return written
