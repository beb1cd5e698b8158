"""q-Fourier transform, escort Q-moments, and hidden-parameter recovery for
density families whose q-Fourier transforms coincide."""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DomainError, IllConditionedError,
                     IllConditionedWarning, InadmissibleParameterError,
                     InconsistentSamplesError, IntegrandError, InversionError,
                     NonMonotoneError, OutsideMonotoneWindowError, QFourierError,
                     TargetOutOfRangeError)
from .qspecial import (c_q, cos_q, exp_q_imag, exp_q_real, gamma, lgamma, q_gaussian,
                       sin_q)
from .quadrature import (IntegrationResult, Interval, QuadratureOptions, integrate,
                         integrate_complex)
from .densities import (Density, FFamily, HFamily, escort_integral, escort_pdf, f_density,
                        f_mu, f_nu, f_pdf, f_pi, family_density, h_a_max, h_b, h_density,
                        h_mu, h_nu, h_pdf, h_pi, mu_numeric, nu_numeric, pi_numeric,
                        q_gaussian_density)
from .transform import (TransformSample, mu_from_qft_derivative, qft, qft_derivative_at_origin,
                        qft_f_reference, qft_h_closed, qft_integral, qft_samples,
                        shifted_index)
from .inversion import (NuObservation, RecoveryResult, identify_lambda_from_qft, recover_A,
                        recover_a, recover_monotone)

__all__ = [name for name in dir() if not name.startswith("_")]
