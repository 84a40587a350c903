"""Complex sequential growth dynamics for causal sets.

Enumerates the tree of naturally labelled causal sets, evaluates the
complex measures induced by coupling constants ``t_k``, and decides whether
those measures have bounded variation.
"""

__version__ = "0.1.0"
FORMULA_SET = "r1"

from .causet import (  # noqa: E402
    CanonicalKey,
    GrowthTree,
    Ideal,
    LabelledCauset,
    LevelCatalog,
    antichain,
    canonical_form,
    chain,
    children,
    enumerate_level,
    extend,
    is_originary,
    order_ideals,
    partial_stems,
)
from .covariant import (  # noqa: E402
    ProductState,
    gregarious_amplitude,
    originary_measure,
    originary_truncation,
    stem_event_measure,
)
from .dynamics import Couplings, amplitude, classical_prob, couplings_from_spec, lam  # noqa: E402
from .errors import (  # noqa: E402
    CapExceeded,
    ConfigError,
    ConsistencyError,
    ContractError,
    CSGError,
    DegenerateDynamics,
    UnsupportedDynamics,
)
from .measure import Event, MeasureEngine, event_measure, level_zeta, node_measure, s_n_series  # noqa: E402
from .sampler import SampleConfig, empirical_frequencies, sample_causet  # noqa: E402
from .variation import ClassifyOptions, Status, Verdict, classify, cp_zeta_c, zeta_a, zeta_c  # noqa: E402
