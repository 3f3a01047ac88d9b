"""Gene-partitioned alignment loading and subset concatenation.

Input format: one FASTA file holding the concatenated alignment plus a
partition sidecar with one ``gene_name = start-end`` line per gene
(1-based, inclusive). Partitions must tile the alignment exactly. Gene
names are sorted lexicographically on load; that order is what a binary
word's coordinates refer to for the rest of the run.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from swarmselect.core import BinaryPosition

ALPHABET = frozenset(b"ACGT-")
GAP = ord("-")


class AlignmentError(ValueError):
    """Base class for malformed instance files."""


class RaggedAlignmentError(AlignmentError):
    pass


class UnknownCharacterError(AlignmentError):
    pass


class DuplicateTaxonError(AlignmentError):
    pass


class DuplicateGeneError(AlignmentError):
    pass


class PartitionOverlapError(AlignmentError):
    pass


class PartitionGapError(AlignmentError):
    pass


class EmptyPartitionError(AlignmentError):
    pass


class EmptySubsetError(AlignmentError):
    pass


@dataclass(frozen=True)
class GeneMatrix:
    """Aligned sequences split into named gene blocks.

    ``data`` is a (taxa x total-width) uint8 array of ASCII codes; ``genes``
    maps position in lexicographic name order to a column slice of it.
    """

    taxa: tuple[str, ...]
    outgroup: str
    gene_names: tuple[str, ...]
    gene_bounds: tuple[tuple[int, int], ...]  # 0-based half-open column ranges
    data: np.ndarray

    @property
    def n_genes(self) -> int:
        return len(self.gene_names)

    @property
    def n_taxa(self) -> int:
        return len(self.taxa)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def gene_block(self, j: int) -> np.ndarray:
        lo, hi = self.gene_bounds[j]
        return self.data[:, lo:hi]

    def gene_width(self, j: int) -> int:
        lo, hi = self.gene_bounds[j]
        return hi - lo

    def concat_subset(self, w: BinaryPosition) -> np.ndarray:
        """Column-concatenation of the selected gene blocks, in gene order."""
        if len(w) != self.n_genes:
            raise ValueError(f"word length {len(w)} != gene count {self.n_genes}")
        selected = [self.gene_block(j) for j in range(self.n_genes) if w[j] == 1]
        if not selected:
            raise EmptySubsetError("word selects no genes")
        return np.concatenate(selected, axis=1)


def _parse_fasta(path: Path) -> list[tuple[str, str]]:
    records: list[tuple[str, str]] = []
    name: str | None = None
    chunks: list[str] = []
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            if name is not None:
                records.append((name, "".join(chunks)))
            name = line[1:].split()[0]
            chunks = []
        else:
            if name is None:
                raise AlignmentError(f"{path}: sequence data before any '>' header")
            chunks.append(line.upper())
    if name is not None:
        records.append((name, "".join(chunks)))
    if not records:
        raise AlignmentError(f"{path}: no FASTA records found")
    return records


def _parse_partitions(path: Path) -> list[tuple[str, int, int]]:
    parts: list[tuple[str, int, int]] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise AlignmentError(f"{path}:{lineno}: expected 'name = start-end'")
        name, _, span = line.partition("=")
        name = name.strip()
        try:
            start_s, _, end_s = span.strip().partition("-")
            start, end = int(start_s), int(end_s)
        except ValueError as exc:
            raise AlignmentError(f"{path}:{lineno}: bad range {span.strip()!r}") from exc
        parts.append((name, start, end))
    if not parts:
        raise AlignmentError(f"{path}: no partitions found")
    return parts


def load_gene_matrix(
    fasta_path: str | Path,
    partition_path: str | Path,
    outgroup: str | None = None,
) -> GeneMatrix:
    """Load and validate an instance; raises a named error per defect."""
    fasta_path, partition_path = Path(fasta_path), Path(partition_path)
    records = _parse_fasta(fasta_path)

    taxa = [name for name, _ in records]
    seen: set[str] = set()
    for t in taxa:
        if t in seen:
            raise DuplicateTaxonError(f"duplicate taxon {t!r}")
        seen.add(t)

    width = len(records[0][1])
    for name, seq in records:
        if len(seq) != width:
            raise RaggedAlignmentError(
                f"taxon {name!r} has length {len(seq)}, expected {width}"
            )
        bad = set(seq.encode("ascii", errors="replace")) - ALPHABET
        if bad:
            shown = ", ".join(sorted(chr(c) for c in bad))
            raise UnknownCharacterError(f"taxon {name!r} contains {shown!r}")

    parts = _parse_partitions(partition_path)
    names = [p[0] for p in parts]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise DuplicateGeneError(f"duplicate gene name(s): {sorted(dup)}")
    for name, start, end in parts:
        if start > end:
            raise EmptyPartitionError(f"gene {name!r}: empty range {start}-{end}")
        if start < 1 or end > width:
            raise AlignmentError(
                f"gene {name!r}: range {start}-{end} outside alignment width {width}"
            )
    by_start = sorted(parts, key=lambda p: p[1])
    cursor = 1
    for name, start, end in by_start:
        if start < cursor:
            raise PartitionOverlapError(f"gene {name!r} overlaps a previous partition")
        if start > cursor:
            raise PartitionGapError(
                f"columns {cursor}-{start - 1} not covered by any partition"
            )
        cursor = end + 1
    if cursor != width + 1:
        raise PartitionGapError(f"columns {cursor}-{width} not covered by any partition")

    if outgroup is None:
        outgroup = taxa[0]
    elif outgroup not in taxa:
        raise AlignmentError(f"outgroup {outgroup!r} is not among the taxa")

    data = np.frombuffer(
        "".join(seq for _, seq in records).encode("ascii"), dtype=np.uint8
    ).reshape(len(taxa), width)

    order = sorted(range(len(parts)), key=lambda i: parts[i][0])
    gene_names = tuple(parts[i][0] for i in order)
    gene_bounds = tuple((parts[i][1] - 1, parts[i][2]) for i in order)
    return GeneMatrix(
        taxa=tuple(taxa),
        outgroup=outgroup,
        gene_names=gene_names,
        gene_bounds=gene_bounds,
        data=data,
    )


def write_fasta(path: str | Path, taxa: tuple[str, ...], block: np.ndarray) -> None:
    with open(path, "w") as fh:
        for i, name in enumerate(taxa):
            fh.write(f">{name}\n")
            fh.write(block[i].tobytes().decode("ascii") + "\n")
