"""swingkit: full-body golf swing analysis from a single wrist-worn IMU.

Pipeline stages, each its own module:

- nn          differentiable substrate (tensors, layers, Adam, grad checks)
- skeleton    the 26-body kinematic tree and its JSON schema
- kinematics  6D rotations, forward kinematics, joint angles, MPJPE/MPJRE
- datagen     procedural swing corpus and the virtual wrist IMU
- posenet     wrist IMU -> full-body pose regression
- events      swing-event detection and the PCE metric
- tokenizer   compositional FSQ autoencoder over five body parts
- prior       bidirectional masked transformer over token grids
- analysis    anomalies, inpainting, scoring, probes, relevance maps
- cli         the `swingkit` command-line front end
"""

__version__ = "0.1.0"
