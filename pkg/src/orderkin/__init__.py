"""Kinetic theory of fluids with orientational order: manifolds, collisions, DSMC, mean field."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DegenerateEnsembleError,
    DegenerateGeometryError,
    NotApplicableError,
    OrderKinError,
)
from .manifold import ManifoldSpec, RotationElement, act, chart_step, infinitesimal_generator  # noqa: E402
from .mechanics import (  # noqa: E402
    InvariantSet,
    ParticleState,
    check_frame_indifference,
    generalized_angular_momentum,
    kinetic_energy,
    linear_momentum,
)
from .collisions import (  # noqa: E402
    CollisionGeometry,
    CollisionOutcome,
    bubble_collide,
    calamitic_collide_2d,
    calamitic_collide_3d,
    hard_sphere_collide,
    headtail_collide_2d,
    post_collision_manifold_dim,
    rigid_impulse,
)
from .dsmc import (  # noqa: E402
    Ensemble,
    KernelSpec,
    contact_velocity,
    dsmc_step,
    h_functional,
    kernel_rate,
    reciprocity_check,
    sample_maxwellian,
    weak_form_test,
)
from .meanfield import (  # noqa: E402
    EnsembleStats,
    MeanFieldSpec,
    classify_fixed_point,
    integrate_ensemble,
    linear_decay_rate,
    vlasov_force,
)

__all__ = [name for name in dir() if not name.startswith("_")]
