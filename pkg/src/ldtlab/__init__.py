"""Low-degree agreement tests over prime fields: tables, testers, spectra, decoding."""

__version__ = "0.1.0"

from .errors import (InsufficientDataError, NoFitError, RareEventError, ResourceCapError,
                     UsageError)
from .gf import FieldElement, FieldParams, make_rng
from .poly import MultiPoly, interpolate, random_poly
from .geometry import AffineFlat, canonicalize, enumerate_flats, sample_edge, sample_flat
from .stats import Estimate
from .tables import (CorruptedTable, HonestTable, PlantedSpec, PlantedTable, corrupted_table,
                     honest_table, planted_table, table_agreement, table_from_descriptor)
from .tester import TestSpec, compare_variants, estimate_pass, sample_D
from .spectra import (GrassmannSpec, brute_spectrum, expansion_bounds, grassmann_eigenvalue,
                      inclusion_singular_value, sampling_deviation_check)
from .decoder import (DecoderParams, candidate_equality_check, decode, fit_global,
                      rs_failure_exact, rs_neighborhood_test)
