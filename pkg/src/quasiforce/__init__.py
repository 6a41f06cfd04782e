"""Finite forcing families for step graphons, with exact rational arithmetic."""

from .counterexample import build_counterexample_pair
from .forcing import degree_forcing_pipeline, distinguishing_graph, forcing_pipeline
from .gadgets import GadgetDescriptor, PCombination, build_color_gadget, eval_Qk, verify_color_gadget
from .graphs import Graph, QuantumGraph, QuantumRootedGraph, RootedGraph
from .kernel import StepKernel, hom_density, random_kernel, weak_iso, weakly_isomorphic
from .powersums import multiset_from_power_sums
from .sbm import empirical_hom_density, sample_graph

__version__ = "0.1.0"

__all__ = [
    "Graph", "RootedGraph", "QuantumGraph", "QuantumRootedGraph",
    "StepKernel", "hom_density", "random_kernel", "weak_iso", "weakly_isomorphic",
    "GadgetDescriptor", "PCombination", "build_color_gadget", "eval_Qk", "verify_color_gadget",
    "forcing_pipeline", "degree_forcing_pipeline", "distinguishing_graph",
    "multiset_from_power_sums", "build_counterexample_pair",
    "sample_graph", "empirical_hom_density",
]
