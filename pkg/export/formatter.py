import logging
import re
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from jinja2 import Environment, FileSystemLoader, select_autoescape

from config import Config
from errors import UsageError
from stability.dendrogram import Dendrogram
from stability.models import SclopReport, StudyResult

PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]

FORMATS = ["newick", "dot", "svg", "summary", "details"]


def topic_name(label: Tuple[int, int]):
    """``run.topic``, both 1-based."""
    run, topic = label
    return f"{run + 1}.{topic + 1}"


def leaf_names(labels: Sequence[Tuple[int, int]], words: Optional[Dict[Tuple[int, int], List[str]]] = None):
    names = []
    for label in labels:
        name = topic_name(label)
        if words is not None and len(words.get(label, [])) > 0:
            name = f"{name} {' '.join(words[label])}"
        names.append(name)

    return names


class ReportFormatter:
    """Renders analyses as Newick, DOT, SVG and markdown from the templates in ``data/templates``."""

    __newick_plain = re.compile(r"^[^\s()\[\]':;,]+$")

    def __init__(self):
        self.__env = Environment(
            loader=FileSystemLoader(str(Config.get_templates_dir())),
            autoescape=select_autoescape(enabled_extensions=["svg"], default_for_string=False),
            trim_blocks=True,
            lstrip_blocks=True,
        )
        self.__env.filters["dot_quote"] = ReportFormatter.__dot_quote
        self.__templates = {name: self.__env.get_template(name) for name in self.__env.list_templates()}

    def render(self, fmt: str, dendrogram: Dendrogram, report: SclopReport, color_by: str = "run", names=None):
        """
        Renders one export format.
        :param fmt: One of ``newick``, ``dot``, ``svg``, ``summary``, ``details``.
        :param names: Leaf names; defaults to ``run.topic`` labels.
        """
        names = names or leaf_names(dendrogram.labels)

        if fmt == "newick":
            return self.get_newick(dendrogram, names)

        if fmt == "dot":
            return self.get_dot(dendrogram, report, color_by, names)

        if fmt == "svg":
            return self.get_svg(dendrogram, report, color_by, names)

        if fmt in ["summary", "details"]:
            return self.get_report_text(report, fmt, n_leaves=dendrogram.n_leaves)

        raise UsageError(f"Unknown export format: {fmt}")

    @staticmethod
    def get_newick(dendrogram: Dendrogram, names: Sequence[str]):
        """
        The dendrogram in Newick format.

        Branch lengths are the height differences between parent and child.
        """
        n = dendrogram.n_leaves
        subtrees = [ReportFormatter.__newick_name(name) for name in names]

        for step, (left, right, height) in enumerate(dendrogram.merges):
            parts = [
                f"{subtrees[child]}:{height - dendrogram.height(child):g}"
                for child in (left, right)
            ]
            subtrees.append(f"({','.join(parts)})")

        return subtrees[2 * n - 2] + ";\n"

    def get_dot(self, dendrogram: Dendrogram, report: SclopReport, color_by: str, names: Sequence[str]):
        colors = ReportFormatter.leaf_colors(dendrogram, report, color_by)
        n = dendrogram.n_leaves

        leaves = [{"id": leaf, "name": names[leaf], "color": colors[leaf]} for leaf in range(n)]
        merges = [
            {"id": n + step, "left": left, "right": right, "height": height}
            for step, (left, right, height) in enumerate(dendrogram.merges)
        ]
        return self.__templates["dendrogram.dot"].render(leaves=leaves, merges=merges)

    def get_svg(self, dendrogram: Dendrogram, report: SclopReport, color_by: str, names: Sequence[str]):
        colors = ReportFormatter.leaf_colors(dendrogram, report, color_by)
        layout = DendrogramLayout(dendrogram)

        leaves = [
            {"x": layout.x[leaf], "y": layout.base, "name": names[leaf], "color": colors[leaf]}
            for leaf in dendrogram.leaf_order()
        ]
        return self.__templates["dendrogram.svg"].render(
            width=layout.width,
            height=layout.height,
            lines=layout.lines(),
            leaves=leaves,
            ticks=layout.ticks(),
            axis_x=layout.margin / 2,
            title=f"S-CLOP {report.score:.4f}",
        )

    def get_ecdf_svg(self, result: StudyResult):
        """Step plots of the empirical CDFs of every sample kind and subsample size."""
        width, height, margin = 640, 420, 60
        values = np.array([sample.value for sample in result.samples])
        if len(values) == 0:
            raise UsageError("The study has no samples to plot")

        low, high = float(values.min()), float(values.max())
        if high - low < 1e-9:
            low, high = low - 0.05, high + 0.05

        def px(value):
            return margin + (value - low) / (high - low) * (width - 2 * margin)

        def py(share):
            return height - margin - share * (height - 2 * margin)

        series = []
        index = 0
        for kind in ["raw", "prototype"]:
            for size in result.sizes:
                ecdf = result.ecdf(kind, size)
                points = [(px(low), py(0.0))]
                previous = 0.0
                for x, y in zip(ecdf.x[1:], ecdf.y[1:]):
                    points.append((px(x), py(previous)))
                    points.append((px(x), py(y)))
                    previous = y
                points.append((px(high), py(previous)))

                series.append({
                    "label": f"{kind}, {size} runs",
                    "color": PALETTE[index % len(PALETTE)],
                    "dashed": kind == "raw",
                    "points": " ".join(f"{x:.2f},{y:.2f}" for x, y in points),
                })
                index += 1

        x_ticks = [{"x": px(v), "label": f"{v:.3f}"} for v in np.linspace(low, high, 5)]
        y_ticks = [{"y": py(v), "label": f"{v:.2f}"} for v in np.linspace(0.0, 1.0, 5)]
        return self.__templates["ecdf.svg"].render(
            width=width,
            height=height,
            margin=margin,
            series=series,
            x_ticks=x_ticks,
            y_ticks=y_ticks,
        )

    def get_report_text(self, report: SclopReport, report_format: str, **kwargs):
        groups = [
            {"index": index + 1, "size": sum(group.t), "group": group, "members": [topic_name(m) for m in group.members]}
            for index, group in enumerate(report.groups)
        ]
        logging.debug(f"Rendering {report_format} for {len(groups)} clusters")
        return self.__templates[f"{report_format}.md"].render(report=report, groups=groups, **kwargs)

    @staticmethod
    def leaf_colors(dendrogram: Dendrogram, report: SclopReport, color_by: str):
        """One colour per leaf, by run or by pruned cluster."""
        if color_by == "run":
            return [PALETTE[run % len(PALETTE)] for run, _ in dendrogram.labels]

        if color_by == "cluster":
            cluster_of = {}
            for index, group in enumerate(report.groups):
                for member in group.members:
                    cluster_of[tuple(member)] = index

            return [PALETTE[cluster_of.get(tuple(label), 0) % len(PALETTE)] for label in dendrogram.labels]

        raise UsageError(f"Unknown colouring: {color_by}")

    @staticmethod
    def __newick_name(name: str):
        if ReportFormatter.__newick_plain.match(name):
            return name

        return "'" + name.replace("'", "''") + "'"

    @staticmethod
    def __dot_quote(value):
        return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


class DendrogramLayout:
    """
    Pixel positions for drawing a dendrogram with the root at the top.

    Leaves are spread evenly in left-to-right order; an internal node sits
    midway between its children at a depth proportional to its height.
    """

    leaf_spacing = 14
    margin = 60
    plot_height = 360
    label_space = 200

    def __init__(self, dendrogram: Dendrogram):
        self.__dendrogram = dendrogram
        n = dendrogram.n_leaves

        self.width = 2 * self.margin + n * self.leaf_spacing
        self.height = 2 * self.margin + self.plot_height + self.label_space
        self.base = self.margin + self.plot_height
        self.__max_height = max((height for _, _, height in dendrogram.merges), default=0.0) or 1.0

        self.x = np.zeros(2 * n - 1)
        for position, leaf in enumerate(dendrogram.leaf_order()):
            self.x[leaf] = self.margin + (position + 0.5) * self.leaf_spacing

        for step, (left, right, _) in enumerate(dendrogram.merges):
            self.x[n + step] = (self.x[left] + self.x[right]) / 2

    def y(self, height: float):
        return self.base - height / self.__max_height * self.plot_height

    def lines(self):
        """Line segments as dicts with ``x1, y1, x2, y2``."""
        dendrogram = self.__dendrogram
        segments = []
        for step, (left, right, height) in enumerate(dendrogram.merges):
            top = self.y(height)
            segments.append({"x1": self.x[left], "y1": top, "x2": self.x[right], "y2": top})
            for child in (left, right):
                segments.append({
                    "x1": self.x[child], "y1": top, "x2": self.x[child], "y2": self.y(dendrogram.height(child)),
                })

        return segments

    def ticks(self):
        return [{"y": self.y(h), "label": f"{h:.2f}"} for h in np.linspace(0.0, self.__max_height, 5)]
