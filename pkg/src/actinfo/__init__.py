"""Active information of finite-state stochastic searches.

Core quantities: the log-ratio of target probabilities between an informed
search and a null search, exponential-tilting equilibria, time-indexed and
stopped-search variants, estimators with asymptotic variances, fine-tuning
tests, and their large-deviation significance rates.
"""

__version__ = "0.1.0"

from .core import (
    Distribution,
    SpecificityProfile,
    StateSpace,
    TargetSet,
    actinfo,
    functional_information,
    kl_divergence,
    stringent_target,
    target_probability,
    target_set,
)
from .tilting import (
    TiltedFamily,
    actinfo_equilibrium,
    log_partition,
    solve_theta_for_target,
    tilt,
    tilted_moments,
)
from .chains import (
    AcceptanceRule,
    ProposalKernel,
    TransitionKernel,
    actinfo_at_time,
    build_kernel,
    evolve,
    moran_fixation,
    reference_null,
    stationary,
)
from .absorption import (
    AbsorbingDecomposition,
    absorption_cdf,
    actinfo_stopped,
    decompose,
    expected_hitting_time,
)
from .sampling import RandomSource, SampleSet, empirical_distribution, sample_iid, simulate_chain
from .inference import (
    EstimationResult,
    ParametricFamily,
    TestOutcome,
    ft_test,
    joint_mle,
    lower_bound_actinfo,
    mle_tilt,
    nonparam_actinfo,
    p0_max,
    param_actinfo,
    param_variance_nuisance,
    theta_star,
    two_sample_actinfo,
)
from .deviations import RateReport, cumulant, decay_slope, exact_significance, nonparam_rate, param_rate
from .models import (
    CosmologyModel,
    MachineModel,
    StudentModel,
    build_machine,
    cosmology_actinfo_bound,
    cosmology_interval_prob,
    figure_equilibrium_sweep,
    figure_time_sweep,
    student_actinfo,
    student_pass_probability,
)
