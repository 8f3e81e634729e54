"""Revenue-optimal single-item auctions for risk-loving buyers."""
from .core import (
    AssumptionError,
    DirectMechanism,
    DomainError,
    Instance,
    InterimMechanism,
    InvariantError,
    MenuOption,
    UsageError,
    Utility,
    UtilityKindError,
    acceptance_ratio,
    eval_utility,
    interim,
)
from .lp_oracle import LPModel, SizeError, build_primal_lp, optimal_revenue_oracle, solve_lp
from .mechanisms import (
    LoserPayMechanism,
    MenuMechanism,
    PostedPriceMechanism,
    check_assumption_A1,
    loser_pay_auction,
    menu_mechanism_revenue,
    menu_utility,
    optimal_posted_price,
    posted_price_revenue,
    to_direct,
    utility_curve,
)
from .simplex import SolverError
from .verify import (
    DualCertificate,
    VerificationReport,
    build_dual_certificate_multi,
    build_dual_certificate_single,
    check_bic,
    check_dual_feasibility,
    check_feasibility,
    check_ir,
    classify_dual_shape,
    duality_gap,
    expected_revenue,
    gamma_fn,
    pi_fn,
)
from .virtual import (
    IronedVirtualValues,
    VirtualValues,
    iron,
    is_regular,
    virtual_values,
    virtual_values_multi,
    virtual_values_single,
)

__all__ = [name for name in dir() if not name.startswith("_")]
