"""Dynamic hierarchical attribute-based encryption for virtual organizations.

A toolkit in five layers:

- :mod:`dhabe.groups` -- pairing-group arithmetic, hashing, canonical codecs
- :mod:`dhabe.policy` -- threshold access trees, secret sharing, Lagrange plans
- :mod:`dhabe.scheme` -- setup, delegation, key issuance, encrypt/decrypt, epochs
- :mod:`dhabe.trust` -- role-based credential inference gating key issuance
- :mod:`dhabe.harness` -- deterministic virtual-organization simulations

plus a command-line front end (:mod:`dhabe.cli`) and a binary serialization
layer (:mod:`dhabe.serialization`) for all persistent objects.
"""

__version__ = "0.1.0"
