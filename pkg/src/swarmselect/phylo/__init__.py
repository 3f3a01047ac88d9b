from swarmselect.phylo.alignment import GeneMatrix, load_gene_matrix
from swarmselect.phylo.evaluate import (
    PhyloEvaluator,
    bootstrap_support,
    evaluate_phylo,
    lowest_support,
)
from swarmselect.phylo.nj import distance_matrix, neighbor_joining, p_distance
from swarmselect.phylo.tree import TopologySignature, UnrootedTree, parse_newick

__all__ = [
    "GeneMatrix",
    "PhyloEvaluator",
    "TopologySignature",
    "UnrootedTree",
    "bootstrap_support",
    "distance_matrix",
    "evaluate_phylo",
    "load_gene_matrix",
    "lowest_support",
    "neighbor_joining",
    "p_distance",
    "parse_newick",
]
