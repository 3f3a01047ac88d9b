"""Synthetic gene-matrix instances with controlled signal.

These builders produce alignments whose columns either support a fixed
8-taxon reference topology (concordant genes) or a conflicting split
(discordant "blurring" genes). Concordant-only subsets bootstrap to full
support; each blurring gene injects enough conflicting columns to pull the
support of two reference edges down hard. Used by the test suite and by
the bundled sample instance.
"""

from __future__ import annotations

from pathlib import Path

from swarmselect.phylo.alignment import GeneMatrix, load_gene_matrix

DEFAULT_TAXA = (
    "aralia",
    "betula",
    "castanea",
    "drimys",
    "eucalyptus",
    "fragaria",
    "glycine",
    "hedera",
)

# Reference topology ((t0,t1),(t2,t3),((t4,t5),(t6,t7))): five internal splits.
_REFERENCE_SPLIT_SIDES = ((0, 1), (2, 3), (4, 5), (6, 7), (4, 5, 6, 7))
# The conflicting split groups t0 with t2, incompatible with the first two.
_BLUR_SIDE = (0, 2)


def _signal_columns(side: tuple[int, ...], count: int, n_taxa: int) -> list[str]:
    column = "".join("C" if i in side else "A" for i in range(n_taxa))
    return [column] * count


def _gene_columns(
    n_taxa: int, signal: int, blurred: bool, blur_strength: int
) -> list[str]:
    columns: list[str] = []
    if blurred:
        columns += _signal_columns(_BLUR_SIDE, blur_strength, n_taxa)
    else:
        for side in _REFERENCE_SPLIT_SIDES:
            columns += _signal_columns(side, signal, n_taxa)
    for t in range(n_taxa):  # one private column per taxon keeps distances apart
        columns.append("".join("G" if i == t else "A" for i in range(n_taxa)))
    columns += ["A" * n_taxa] * 2
    return columns


def synth_instance_text(
    n_genes: int = 10,
    blur_genes: tuple[int, ...] = (),
    signal: int = 4,
    blur_strength: int | None = None,
    taxa: tuple[str, ...] = DEFAULT_TAXA,
) -> tuple[str, str]:
    """Build (fasta_text, partition_text) for a synthetic instance.

    ``blur_genes`` lists 0-based gene indices carrying the conflicting
    signal. ``blur_strength`` defaults to just under the column count that
    would exactly balance the concordant signal of the other genes, so the
    full-data reference keeps the true topology while bootstrap replicates
    flip the two corrupted edges roughly half the time.
    """
    n_taxa = len(taxa)
    if blur_strength is None:
        concordant = n_genes - len(blur_genes)
        blur_strength = max(1, 2 * signal * concordant - 2)
    per_gene = [
        _gene_columns(n_taxa, signal, g in blur_genes, blur_strength)
        for g in range(n_genes)
    ]

    rows = ["" for _ in range(n_taxa)]
    partitions = []
    cursor = 1
    for g, columns in enumerate(per_gene):
        for col in columns:
            for t in range(n_taxa):
                rows[t] += col[t]
        partitions.append(f"gene{g + 1:02d} = {cursor}-{cursor + len(columns) - 1}")
        cursor += len(columns)

    fasta = "".join(f">{name}\n{rows[t]}\n" for t, name in enumerate(taxa))
    return fasta, "\n".join(partitions) + "\n"


def write_synth_instance(
    out_dir: str | Path,
    stem: str = "instance",
    **kwargs,
) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fasta, parts = synth_instance_text(**kwargs)
    fasta_path = out_dir / f"{stem}.fasta"
    part_path = out_dir / f"{stem}.partitions"
    fasta_path.write_text(fasta)
    part_path.write_text(parts)
    return fasta_path, part_path


def synth_matrix(**kwargs) -> GeneMatrix:
    import tempfile

    with tempfile.TemporaryDirectory(prefix="swarmselect-synth-") as tmp:
        fasta_path, part_path = write_synth_instance(tmp, **kwargs)
        return load_gene_matrix(fasta_path, part_path)
