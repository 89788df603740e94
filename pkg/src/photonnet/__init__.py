"""Frequency-resolved multi-photon states, linear networks and APD detection statistics."""

from .algebra import (IDENTITY, Mode, ModeOverlap, MonomialTerm, StateVector, apply_one_body,
                      apply_substitution, gram_matrix, inner_product, norm_squared, photon_count,
                      tensor)
from .channels import (UnitaryField, apply_channel, apply_network, beam_splitter, coupler,
                       custom_unitary, decoupled_splice_matrix, loss_channel, phase_advance,
                       polarization_rotation, splice)
from .density import (DensityOp, decayed_single_photon_density, fidelity_overlap, partial_trace,
                      trace)
from .detection import (ApdModel, GateWindow, Identity, LinearResponse, NumberOperator, Outcome,
                        OutcomeSpec, Projector, apply_m0, click_marginals,
                        filtered_detector_probability, gated_kernel, gated_number_expectation,
                        linear_response_probability, no_cross_terms_decomposition,
                        number_expectation, outcome_probability, outcome_table,
                        pr_detect_given_n, projector_apply)
from .errors import CapExceeded, ContractError, PhotonNetError, ValidationError
from .sources import (BiPhotonSpec, CoherentSpec, bi_photon, coherent, coherent_product,
                      energy_expectation, fock_state, general_multi_mode, n_photon, qkd_psi_n,
                      single_photon, singlet_bi_photon, superposition)
from .spectral import FrequencyGrid, SpectralAmplitude, inner, mean_frequency, symmetrize

__version__ = "0.1.0"
