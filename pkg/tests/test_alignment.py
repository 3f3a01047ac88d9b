import numpy as np
import pytest

from swarmselect.core import BinaryPosition
from swarmselect.phylo.alignment import (
    DuplicateGeneError,
    DuplicateTaxonError,
    EmptyPartitionError,
    EmptySubsetError,
    PartitionGapError,
    PartitionOverlapError,
    RaggedAlignmentError,
    UnknownCharacterError,
    load_gene_matrix,
)


def write_instance(tmp_path, fasta: str, partitions: str):
    f = tmp_path / "a.fasta"
    p = tmp_path / "a.partitions"
    f.write_text(fasta)
    p.write_text(partitions)
    return f, p


GOOD_FASTA = (
    ">tax1\nACGTACGTACGTACGTACGT\n"
    ">tax2\nACGTACGTACGTACGAACGT\n"
    ">tax3\nACGAACGTACGTACGTACGT\n"
    ">tax4\nACGTACGTACCTACGTACGT\n"
)
GOOD_PARTS = "beta = 13-20\nalpha = 1-12\n"


class TestLoadGeneMatrix:
    def test_constructed_fixture(self, tmp_path):
        m = load_gene_matrix(*write_instance(tmp_path, GOOD_FASTA, GOOD_PARTS))
        assert m.n_genes == 2
        assert m.width == 20
        assert m.gene_names == ("alpha", "beta")  # lexicographic order
        assert m.gene_width(0) == 12 and m.gene_width(1) == 8
        assert m.taxa == ("tax1", "tax2", "tax3", "tax4")
        assert m.outgroup == "tax1"  # defaults to the first taxon

    def test_explicit_outgroup(self, tmp_path):
        f, p = write_instance(tmp_path, GOOD_FASTA, GOOD_PARTS)
        m = load_gene_matrix(f, p, outgroup="tax3")
        assert m.outgroup == "tax3"
        with pytest.raises(ValueError):
            load_gene_matrix(f, p, outgroup="nobody")

    def test_multiline_sequences_concatenate(self, tmp_path):
        fasta = ">a\nACGT\nACGT\n>b\nACGTAC\nGT\n"
        m = load_gene_matrix(*write_instance(tmp_path, fasta, "g = 1-8\n"))
        assert m.width == 8

    def test_ragged_rows(self, tmp_path):
        fasta = ">a\nACGT\n>b\nACG\n"
        with pytest.raises(RaggedAlignmentError):
            load_gene_matrix(*write_instance(tmp_path, fasta, "g = 1-4\n"))

    def test_unknown_characters(self, tmp_path):
        fasta = ">a\nACXT\n>b\nACGT\n"
        with pytest.raises(UnknownCharacterError):
            load_gene_matrix(*write_instance(tmp_path, fasta, "g = 1-4\n"))

    def test_duplicate_taxa(self, tmp_path):
        fasta = ">a\nACGT\n>a\nACGT\n"
        with pytest.raises(DuplicateTaxonError):
            load_gene_matrix(*write_instance(tmp_path, fasta, "g = 1-4\n"))

    def test_partition_overlap(self, tmp_path):
        parts = "alpha = 1-12\nbeta = 12-20\n"
        with pytest.raises(PartitionOverlapError):
            load_gene_matrix(*write_instance(tmp_path, GOOD_FASTA, parts))

    def test_partition_gap(self, tmp_path):
        parts = "alpha = 1-10\nbeta = 13-20\n"
        with pytest.raises(PartitionGapError):
            load_gene_matrix(*write_instance(tmp_path, GOOD_FASTA, parts))

    def test_partition_tail_gap(self, tmp_path):
        parts = "alpha = 1-12\nbeta = 13-18\n"
        with pytest.raises(PartitionGapError):
            load_gene_matrix(*write_instance(tmp_path, GOOD_FASTA, parts))

    def test_empty_partition(self, tmp_path):
        parts = "alpha = 5-4\nbeta = 1-20\n"
        with pytest.raises(EmptyPartitionError):
            load_gene_matrix(*write_instance(tmp_path, GOOD_FASTA, parts))

    def test_duplicate_gene_names(self, tmp_path):
        parts = "alpha = 1-12\nalpha = 13-20\n"
        with pytest.raises(DuplicateGeneError):
            load_gene_matrix(*write_instance(tmp_path, GOOD_FASTA, parts))

    def test_gaps_allowed_in_sequences(self, tmp_path):
        fasta = ">a\nAC-T\n>b\nACGT\n"
        m = load_gene_matrix(*write_instance(tmp_path, fasta, "g = 1-4\n"))
        assert m.width == 4


class TestConcatSubset:
    @pytest.fixture()
    def matrix(self, tmp_path):
        return load_gene_matrix(*write_instance(tmp_path, GOOD_FASTA, GOOD_PARTS))

    def test_all_ones_full_width(self, matrix):
        block = matrix.concat_subset(BinaryPosition.ones(2))
        assert block.shape == (4, 20)

    def test_single_gene_verbatim(self, matrix):
        block = matrix.concat_subset(BinaryPosition.from_text("01"))
        assert block.shape == (4, 8)
        assert np.array_equal(block, matrix.gene_block(1))

    def test_first_gene_only(self, matrix):
        block = matrix.concat_subset(BinaryPosition.from_text("10"))
        assert block.shape == (4, 12)

    def test_empty_subset_rejected(self, matrix):
        with pytest.raises(EmptySubsetError):
            matrix.concat_subset(BinaryPosition.zeros(2))

    def test_length_mismatch_rejected(self, matrix):
        with pytest.raises(ValueError):
            matrix.concat_subset(BinaryPosition.ones(3))
