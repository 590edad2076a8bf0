"""Thermal Weyl and Wigner symbols of quadratic Hamiltonians.

The thermal operator exp(-beta H^) of a quadratic Hamiltonian is the
metaplectic image of the complex symplectic matrix exp(-i hbar beta J H).
This package builds that matrix, its Cayley transform, the Gaussian
symbols on both sides of the Weyl/Wigner duality, and the resulting
thermodynamics. A truncated Fock-space oracle and a semiclassical
Moyal-product engine cross-check the closed forms.
"""
from .errors import (
    AmbiguousClassification,
    DivergenceAtWeyl,
    DivergenceAtWigner,
    DivergenceError,
    IndexUndetermined,
    InsufficientDecay,
    NotAState,
    NotConverged,
    NotPositiveDefinite,
    NumericalFailure,
    ParabolicPartition,
    PartitionDiverges,
    UnsupportedLinear,
    ValidationError,
    WickPhaseError,
)
from .hamiltonians import (
    CATALOG,
    QuadraticHamiltonian,
    apply_congruence,
    catalog,
    closed_form_partition,
    direct_sum,
    load_spec,
    parse_spec,
    serialize,
)
from .symplectic import (
    classify_generator,
    is_symplectic,
    symplectic_form,
    williamson,
)
from .wick import (
    cayley,
    complex_symplectic,
    cz_realtime,
    cz_thermal,
    detect_divergences,
    inverse_cayley,
    realtime_symplectic,
)
from .symbols import (
    characteristic_function,
    metaplectic_symbols,
    symplectic_fourier,
    thermal_weyl_symbol,
    thermal_wigner_symbol,
    wigner_function,
)
from .thermo import beta_scan, classical_limit, partition_function, thermo_report

__version__ = "0.1.0"
