"""Mechanisms and simulation for a market in unbiased samples of private data.

Sellers choose between a risky pay-if-used scheme (Option A), a certain
smaller payment (Option B) and opting out. Risk-averse sellers accept the
certain payment, which lets the market-maker sell uniformly random samples
for less than paying everyone the high-cost sellers' price.
"""

from ._kernels import BACKEND
from .agents import (
    Choice,
    OptionTriple,
    SellerProfile,
    UtilitySpec,
    choose_option,
    choose_option_bundled,
    expected_utility,
    utility_value,
)
from .elicitation import (
    ChoiceRecord,
    ElicitationLog,
    ParticipationPrice,
    QuestionGrid,
    discover_x_bar,
    elicit_triples,
    optout_fraction,
    run_elicitation,
)
from .errors import (
    ConfigError,
    ConsistencyError,
    DomainError,
    ElicitationInsufficientError,
    MarketError,
    MenuError,
    QueryError,
    RequestError,
)
from .market import (
    BuyerRequest,
    Ledger,
    Sample,
    Settlement,
    draw_sample,
    estimate_mean,
    inclusion_frequencies,
    reverse_auction_sample,
    settle,
    settle_bundled,
    simulate_settlements,
    srs_estimates,
)
from .menu import (
    BundledY,
    MenuEntry,
    PricingMenu,
    baseline_menu,
    build_menu,
    cara_certainty_equivalent,
    discrimination_lower_bound,
    expected_total_price,
    optimal_y,
    optimal_y_bundled,
)
from .population import (
    CohortSpec,
    DiscreteCost,
    PointMass,
    Population,
    Predicate,
    Seller,
    UniformCost,
    generate_population,
    population_mean,
    qualifying_subset,
)

__version__ = "0.1.0"
