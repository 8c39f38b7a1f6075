"""Randomized skeleton selection for interpolative and CUR decompositions."""
from ._accel import USE_NUMBA
from .embed import EmbeddingSpec, Embedding, sketch
from .errors import (FormatError, InstabilityError, ParameterError,
                     RandCurError, RankDeficiencyError)
from .factors import (build_column_id, build_cur_skeleton_inverse,
                      build_cur_stable, build_row_id, build_two_sided_id,
                      estimate_id_from_sketches, evaluate_error)
from .matsource import (MatrixSource, SnnSpec, load_matrix_market,
                        snn_generate, stream_columns, write_matrix_market)
from .pivot import cpqr_columns, growth_certificate, lupp_columns, lupp_rows
from .rangefinder import (orthogonalized_power_iteration,
                          plain_power_iteration, randomized_svd,
                          row_sketch_rangefinder)
from .skeleton import (SkeletonSet, eta_certificate, rand_cpqr, rand_lupp,
                       rsvd_deim, rsvd_leverage_sampling, select_framework,
                       streaming_select)

__version__ = "0.1.0"
