"""Result tables and figures generated from run ledgers and summaries.

Tables are pure functions of their inputs: regenerating them from the same
ledgers yields byte-identical text. Figures (fitness curves, method
comparison) are rendered to PNG files next to the delimited output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from swarmselect.runtime import RunLedger


def fmt(x: float) -> str:
    return f"{x:.10g}"


@dataclass
class Table:
    title: str
    headers: list[str]
    rows: list[list[str]] = field(default_factory=list)

    def tsv(self) -> str:
        lines = ["\t".join(self.headers)]
        lines += ["\t".join(row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        widths = [len(h) for h in self.headers]
        for row in self.rows:
            widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
        def line(cells: list[str]) -> str:
            return "  ".join(cell.ljust(w) for cell, w in zip(cells, widths)).rstrip()
        out = [self.title, line(self.headers), line(["-" * w for w in widths])]
        out += [line(row) for row in self.rows]
        return "\n".join(out) + "\n"

    def write(self, directory: Path, stem: str) -> None:
        (directory / f"{stem}.tsv").write_text(self.tsv())
        (directory / f"{stem}.txt").write_text(self.text())


@dataclass
class Summary:
    """Parsed summary.tsv: run metadata plus one row per (swarm, rep)."""

    meta: dict[str, str]
    rows: list[dict[str, str]]

    @property
    def label(self) -> str:
        return f"{self.meta.get('method', '?')}/{self.meta.get('particles', '?')}"

    def best_row(self) -> dict[str, str]:
        return max(self.rows, key=lambda r: float(r["fitness"]))


def load_summary(path: str | Path) -> Summary:
    meta: dict[str, str] = {}
    rows: list[dict[str, str]] = []
    headers: list[str] | None = None
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                key, eq, value = token.partition("=")
                if eq:
                    meta[key] = value
            continue
        cells = line.split("\t")
        if headers is None:
            headers = cells
        else:
            rows.append(dict(zip(headers, cells)))
    return Summary(meta=meta, rows=rows)


def topology_table(ledgers: list[tuple[int, RunLedger]]) -> Table:
    """Group every evaluated tree by topology, best scores and occurrences.

    Sorted by best fitness then occurrence count, both descending; words
    without a topology (synthetic oracles, empty subsets) are skipped.
    """
    groups: dict[str, dict] = {}
    for swarm, ledger in ledgers:
        for rec in ledger.records:
            if not rec.topology_id:
                continue
            g = groups.setdefault(
                rec.topology_id,
                {"swarms": set(), "b": rec.b, "p": rec.p, "fitness": rec.fitness, "occ": 0},
            )
            g["swarms"].add(swarm)
            g["occ"] += 1
            if rec.fitness > g["fitness"]:
                g["b"], g["p"], g["fitness"] = rec.b, rec.p, rec.fitness
    ordered = sorted(
        groups.items(), key=lambda kv: (-kv[1]["fitness"], -kv[1]["occ"], kv[0])
    )
    table = Table(
        title="Topologies over all generated trees",
        headers=["topology", "swarms", "b", "p", "fitness", "occurrences"],
    )
    for topo_id, g in ordered:
        table.rows.append(
            [
                topo_id,
                ",".join(str(s) for s in sorted(g["swarms"])),
                fmt(g["b"]),
                fmt(g["p"]),
                fmt(g["fitness"]),
                str(g["occ"]),
            ]
        )
    return table


def best_per_swarm_table(ledgers: list[tuple[int, RunLedger]]) -> Table:
    """Per swarm: removed-gene count of the best word, its F and b."""
    best: dict[int, tuple[float, str, float]] = {}  # swarm -> (fitness, word, b)
    for swarm, ledger in ledgers:
        for rec in ledger.records:
            incumbent = best.get(swarm)
            if incumbent is None or rec.fitness > incumbent[0]:
                best[swarm] = (rec.fitness, rec.word, rec.b)
    table = Table(
        title="Best tree in each swarm",
        headers=["swarm", "removed_genes", "F", "b"],
    )
    for swarm in sorted(best):
        fitness, word, b = best[swarm]
        removed = len(word) - word.count("1")
        table.rows.append([str(swarm), str(removed), fmt(fitness), fmt(b)])
    return table


def compare_methods(summaries: list[Summary]) -> Table:
    """Best b per method and particle count over a shared instance."""
    if len(summaries) < 2:
        raise ValueError("need at least two method summaries to compare")
    instances = sorted({s.meta.get("instance", "?") for s in summaries})
    columns = sorted({s.label for s in summaries})
    table = Table(title="Method comparison (best b)", headers=["instance"] + columns)
    for instance in instances:
        row = [instance]
        for col in columns:
            matches = [
                s for s in summaries
                if s.label == col and s.meta.get("instance", "?") == instance
            ]
            if not matches or not any(s.rows for s in matches):
                row.append("-")
                continue
            rows = [s.best_row() for s in matches if s.rows]
            best = max(rows, key=lambda r: float(r["fitness"]))
            row.append(fmt(float(best["b"])))
        table.rows.append(row)
    return table


def plot_fitness_curves(ledgers: list[tuple[int, RunLedger]], path: str | Path) -> None:
    """Global-best fitness per iteration: one faint line per run plus the mean."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    traces = []
    for _, ledger in ledgers:
        trace = [fitness for _, _, fitness in ledger.best_trace()]
        if trace:
            traces.append(trace)
            ax.plot(range(len(trace)), trace, color="steelblue", alpha=0.25, lw=1)
    if traces:
        horizon = max(len(t) for t in traces)
        padded = [t + [t[-1]] * (horizon - len(t)) for t in traces]
        mean = [sum(t[i] for t in padded) / len(padded) for i in range(horizon)]
        ax.plot(range(horizon), mean, color="firebrick", lw=2, label="mean best fitness")
        ax.legend(loc="lower right")
    ax.set_xlabel("iteration")
    ax.set_ylabel("global best fitness")
    ax.set_title("Convergence of global best fitness")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_method_comparison(table: Table, path: str | Path) -> None:
    """Grouped bars of best b per method column, one group per instance."""
    columns = table.headers[1:]
    instances = [row[0] for row in table.rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    width = 0.8 / max(1, len(columns))
    for c, col in enumerate(columns):
        xs, ys = [], []
        for i, row in enumerate(table.rows):
            if row[c + 1] != "-":
                xs.append(i + c * width)
                ys.append(float(row[c + 1]))
        ax.bar(xs, ys, width=width, label=col)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(instances))])
    ax.set_xticklabels(instances, rotation=20, ha="right")
    ax.set_ylabel("best b")
    ax.set_title("Best lowest-support by method")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
