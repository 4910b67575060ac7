"""Error-floor analysis toolkit for LDPC codes under saturating
log-domain SPA decoding.

Submodules split along the pipeline: channel statistics (`channel`),
Tanner-graph handling (`tanner`, `graphs`, `spectral`), decoding and
capture (`decoder`), density evolution (`dde`), failure-set enumeration
(`census`), the linear state-space failure model (`statespace`),
Monte Carlo and semi-analytic simulation (`simharness`), prediction
plumbing (`floorpred`), and the command-line front end (`cli`).
"""

__version__ = "0.1.0"
