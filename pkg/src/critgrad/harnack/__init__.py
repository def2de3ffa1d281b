"""Empirical checks of the weak Harnack chain for (p-)Laplacian supersolutions.

Submodules:

* :mod:`.samples`: seeded supersolution generators;
* :mod:`.inequalities`: interior/boundary weak Harnack, local maximum
  principle, Brezis–Cabré and comparison checks;
* :mod:`.growth`: growth lemma, its barrier, distribution decay, scaling;
* :mod:`.gisl`: the dyadic covering lemma with a brute-force oracle;
* :mod:`.suites`, :mod:`.properties`: seeded batch runs.
"""
from .frames import cube_mask, frame_bounds, frame_mesh
from .gisl import ContainmentError, GislReport, gisl_check, gisl_check_naive, random_instance
from .growth import (Barrier, DecayTable, barrier, barrier_mesh, calibrate_decay,
                     distribution_decay_check, growth_lemma_check, interior_harnack_scaling)
from .inequalities import (ComparisonResult, GeometryError, HypothesisError, boundary_weak_harnack,
                           brezis_cabre_check, comparison_check, interior_weak_harnack,
                           local_max_principle_check, negative_source_correction, scan_epsilon)
from .report import InequalityReport
from .samples import SampleError, SupersolutionSample, generate_supersolution, verify
from .suites import SuiteResult, boundary_suite

__all__ = [
    "Barrier", "ComparisonResult", "ContainmentError", "DecayTable", "GeometryError", "GislReport",
    "HypothesisError", "InequalityReport", "SampleError", "SuiteResult", "SupersolutionSample",
    "barrier", "barrier_mesh", "boundary_suite", "boundary_weak_harnack", "brezis_cabre_check",
    "calibrate_decay", "comparison_check", "cube_mask", "distribution_decay_check", "frame_bounds",
    "frame_mesh", "generate_supersolution", "gisl_check", "gisl_check_naive", "growth_lemma_check",
    "interior_harnack_scaling", "interior_weak_harnack", "local_max_principle_check",
    "negative_source_correction", "random_instance", "scan_epsilon", "verify",
]
