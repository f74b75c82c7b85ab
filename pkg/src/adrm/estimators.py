"""scikit-learn style wrappers.

``fit`` takes a channel realization and designs the codebook; ``transform``
maps bit words to noiseless received points; ``predict`` detects bit words
from received samples; ``score`` is the bit accuracy ``1 - BER``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_bits, check_channel, check_mimo_channels, check_random_state, check_received
from .codebook import design_codebook_sca
from .config import SystemConfig
from .mimo import (
    design_mimo_codebook, effective_channels, mbcd_phases, mimo_ml_detect, mimo_transceive,
    symbol_vectors,
)
from .modem import int_to_bits, bits_to_int, join_bits, ml_detect, qam, split_bits, transmit


class AdrmTransceiver(BaseEstimator):
    def __init__(self, config: SystemConfig | None = None, power_form="coherent", init="spread",
                 max_iter=100, tol=1e-4):
        self.config = config
        self.power_form = power_form
        self.init = init
        self.max_iter = max_iter
        self.tol = tol

    def _cfg(self) -> SystemConfig:
        return SystemConfig() if self.config is None else self.config

    def fit(self, channel, y=None):
        cfg = self._cfg()
        channel = check_channel(channel, cfg.n_elements, cfg.n_groups)
        self.constellation_ = qam(cfg.mod_order)
        self.codebook_, self.trace_ = design_codebook_sca(
            channel, self.constellation_, cfg, self.power_form, self.init, self.max_iter, self.tol
        )
        self.channel_ = channel
        self.gains_ = self.codebook_.gains(channel.h)
        self.n_bits_ = cfg.rate
        return self

    def _split(self, bits):
        words = check_bits(bits, self.n_bits_)
        return split_bits(words, self.constellation_.order, self.codebook_.order)

    def transform(self, bits):
        check_is_fitted(self, "codebook_")
        m, k = self._split(bits)
        return np.sqrt(self._cfg().p_ap) * self.gains_[k] * self.constellation_.points[m]

    def transmit(self, bits, random_state=None, noise_mode="clt"):
        check_is_fitted(self, "codebook_")
        m, k = self._split(bits)
        return transmit(m, k, self.channel_, self.codebook_, self.constellation_, self._cfg(),
                        check_random_state(random_state), noise_mode)

    def predict(self, y):
        check_is_fitted(self, "codebook_")
        m, k = ml_detect(check_received(y), self.gains_, self.constellation_, self._cfg().p_ap)
        return join_bits(m, k, self.constellation_.order, self.codebook_.order)

    def score(self, y, bits):
        words = check_bits(bits, self.n_bits_)
        return float(1.0 - np.mean(self.predict(y) != words))


class MimoAdrmTransceiver(BaseEstimator):
    def __init__(self, config: SystemConfig | None = None, mbcd_iterations=10, forward_ris_noise=True):
        self.config = config
        self.mbcd_iterations = mbcd_iterations
        self.forward_ris_noise = forward_ris_noise

    def _cfg(self) -> SystemConfig:
        return SystemConfig(nt=2, nr=2) if self.config is None else self.config

    def fit(self, channels, y=None):
        cfg = self._cfg()
        channels = check_mimo_channels(channels, cfg)
        self.constellation_ = qam(cfg.mod_order)
        self.phases_ = mbcd_phases(channels.H, channels.F, channels.G, self.mbcd_iterations)
        self.codebook_, self.trace_ = design_mimo_codebook(channels, self.phases_, self.constellation_, cfg)
        self.channels_ = channels
        self.effective_ = effective_channels(channels, self.phases_, self.codebook_)
        self.n_bits_ = cfg.rate
        return self

    def _split(self, bits):
        cfg = self._cfg()
        words = check_bits(bits, self.n_bits_)
        b = self.constellation_.bits_per_symbol
        s_idx = np.stack([bits_to_int(words[:, t * b:(t + 1) * b]) for t in range(cfg.nt)], axis=1)
        return s_idx, bits_to_int(words[:, cfg.nt * b:])

    def transform(self, bits):
        check_is_fitted(self, "codebook_")
        cfg = self._cfg()
        s_idx, k = self._split(bits)
        s = self.constellation_.points[s_idx]
        return np.sqrt(cfg.p_ap / cfg.nt) * np.einsum("nrt,nt->nr", self.effective_[k], s)

    def transmit(self, bits, random_state=None):
        check_is_fitted(self, "codebook_")
        s_idx, k = self._split(bits)
        return mimo_transceive(s_idx, k, self.channels_, self.phases_, self.codebook_, self.constellation_,
                               self._cfg(), check_random_state(random_state), self.forward_ris_noise,
                               eff=self.effective_)

    def predict(self, y):
        check_is_fitted(self, "codebook_")
        cfg = self._cfg()
        s_hat, k_hat = mimo_ml_detect(check_received(y, cfg.nr), self.channels_, self.phases_, self.codebook_,
                                      self.constellation_, cfg, eff=self.effective_)
        b = self.constellation_.bits_per_symbol
        parts = [int_to_bits(s_hat[:, t], b) for t in range(cfg.nt)]
        parts.append(int_to_bits(k_hat, int(np.log2(self.codebook_.order))))
        return np.concatenate(parts, axis=1)

    def score(self, y, bits):
        words = check_bits(bits, self.n_bits_)
        return float(1.0 - np.mean(self.predict(y) != words))

    @property
    def symbol_vectors_(self):
        check_is_fitted(self, "codebook_")
        return symbol_vectors(self.constellation_, self._cfg().nt)
