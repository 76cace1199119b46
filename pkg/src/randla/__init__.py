"""Randomized numerical linear algebra: sketching, sampling and the solvers built on them."""
__version__ = "0.1.0"

from .core import (FactorizationBundle, IndexSample, RandLAError, RngSeed, factorize,
                   sample_indices, select_stream, stable_rank)
from .sketch import SketchOperator, apply_sketch, embedding_check, make_sketch
from .matmul import MatmulSample, approx_multiply, gram_sketch, matmul_probs, spectral_sample_size
from .leverage import LeverageProfile, coherence, leverage_exact, leverage_fast, leverage_rank_k
from .lstsq import LsSolution, check_conditions, lsqr, solve_exact, solve_precond, solve_sketched
from .lowrank import (ColumnSketchSVD, CURFactors, RangeBasis, adaptive_range_finder, cssp,
                      cur_decompose, cx_decompose, factor_from_basis, linear_time_svd, nystrom,
                      range_finder, select_columns, structural_bound_check)
from .elementwise import SparseSample, quantize, sample_stream, sparsify, structural_error_check
from .laplacian import (LaplacianSolveResult, WeightedGraph, edge_incidence, effective_resistances,
                        laplacian, solve_laplacian, sparsify_graph)
