"""Mixtures of two multinomial logits: identifiability and learning."""

from .model import (
    EmpiricalTable,
    MixtureModel,
    OracleTable,
    Slate,
    WeightVector,
    all_slates,
    empirical_table,
    load_model,
    load_oracle,
    oracle_table,
    random_instance,
    sample_counts,
    sample_empirical,
    save_model,
    save_oracle,
    slate_distribution,
)
from .polynomials import (
    RealPolynomial,
    RootSet,
    Tolerances,
    count_real_roots_sturm,
    cubic_discriminant,
    deflate_root,
    is_exact_root,
    solve_all_roots,
    solve_cubic,
    solve_quartic,
    sylvester_resultant,
)
from .systems import (
    PairSystemInput,
    back_substitute,
    formal_pair_system,
    gate_aggregate,
    pair_quartic,
    pair_slate_quartic,
    pair_system,
    partner_value,
    resultant_gate,
)
from .identify import (
    CandidateSolution,
    IdentifiabilityReport,
    check_identifiability,
    enumerate_candidates,
    solve_3item,
    solve_pair_system,
)
from .learn import (
    LearnConfig,
    LearnReport,
    learn_from_oracle,
    learn_from_samples,
    solve_normalization,
)

__version__ = "0.1.0"
