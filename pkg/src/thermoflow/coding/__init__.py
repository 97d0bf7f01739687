"""Symbolic coding of the cat-map suspension flow: the concrete system,
its Markov partition, itineraries and decoding, the alignment and defect
functionals on stable pairs, the induced return potential, and the flow
cocycles."""

from .functions import (BumpProfile, ConformalWeight, FlowObservable,
                        RoofFunction, TrigPolynomial)
from .induced import (induced_potential, induced_potential_table,
                      representative_sequence, telescoping_residual)
from .partition import (Cell, Crossing, Itinerary, MarkovPartitionSpec,
                        build_cat_partition, verify_markov_inclusions)
from .suspension import (CocycleValues, DefectResult, FlowPoint,
                         NaturalExpansionRate, PropertyAReport,
                         SuspensionSystem, default_system)
from .torus import ToralAutomorphism, cat_map, periodic_points

__all__ = [
    "TrigPolynomial", "BumpProfile", "RoofFunction", "FlowObservable",
    "ConformalWeight",
    "ToralAutomorphism", "cat_map", "periodic_points",
    "FlowPoint", "SuspensionSystem", "default_system", "DefectResult",
    "CocycleValues", "PropertyAReport", "NaturalExpansionRate",
    "MarkovPartitionSpec", "Itinerary", "Cell", "Crossing",
    "build_cat_partition", "verify_markov_inclusions",
    "induced_potential", "induced_potential_table",
    "representative_sequence", "telescoping_residual",
]
