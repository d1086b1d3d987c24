"""classprime: class groups of imaginary quadratic discriminants and the
distribution of primes among ideal classes."""

from .qform import (
    Discriminant,
    QuadForm,
    ReducedForm,
    NotADiscriminant,
    DiscMismatch,
    validate_discriminant,
    is_fundamental,
    identity_form,
    is_reduced,
    reduce,
    reduce_with_transform,
    compose,
    opposite,
    power,
    evaluate,
)
from .classgroup import (
    ClassGroup,
    Character,
    NotFundamental,
    InvalidIdealBasis,
    enumerate_reduced_forms,
    group_structure,
    characters,
    ideal_class_of,
)
from .arith import (
    LimitTooLarge,
    PrimeClassification,
    LOneEstimate,
    unit_count,
    kronecker,
    sieve_primes,
    iter_prime_blocks,
    sqrt_mod_prime,
    sqrt_disc_mod_4p,
    classify_prime,
    prime_power_class,
    representation_count,
    representation_counts_upto,
    dirichlet_r,
    dirichlet_r_upto,
    chi_table,
    l_one_chi,
    class_number_from_l,
)
from .stats import (
    IdentityMismatch,
    Weight,
    PsiReport,
    ScanRecord,
    bump_weight,
    indicator_weight,
    get_weight,
    weight_eval,
    weight_integral,
    mellin,
    phi_weight_eval,
    phi_side_vanishes,
    psi_by_class,
    psi_by_char,
    psi_from_chars,
    variance,
    variance_report,
    least_primes,
    least_prime_ideal_norms,
    exceptional_count,
    exceptional_count_primes,
    count_exceptional,
    scan_record,
)
from .heegner import (
    HeegnerPoint,
    RepulsionReport,
    RepulsionRow,
    heegner_point,
    heegner_points,
    coefficient_bound_fraction,
    cramer_prediction,
    cramer_class_number_pairing,
    repulsion_report,
)

__version__ = "0.1.0"
