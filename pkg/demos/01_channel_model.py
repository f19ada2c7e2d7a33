"""Walk through one channel realization.

Samples the geometry (AP at the origin, tag 30 m away, 30 users in the
tag's 10 m disk), draws every link, and verifies the cascaded-channel and
effective-channel identities numerically.
"""

import numpy as np

from ambsc_noma import ScenarioConfig
from ambsc_noma.channel_model import (effective_channel_matrix,
                                      sample_geometry,
                                      sample_scenario_channels, ula_response)

cfg = ScenarioConfig()
rng = np.random.default_rng(2024)

geometry = sample_geometry(cfg, rng)
print(f"AP at {geometry.ap_position}, BST at {geometry.bst_position}")
print(f"{len(geometry.user_positions)} users, "
      f"mean distance to BST "
      f"{np.linalg.norm(geometry.user_positions - geometry.bst_position, axis=1).mean():.2f} m")

channels = sample_scenario_channels(cfg, geometry, rng)
print(f"direct links:   {channels.direct.shape}   (per-user M-vectors)")
print(f"AP->BST:        {channels.ap_bst.shape} (per-user NxM matrices)")
print(f"BST->user:      {channels.bst_user.shape}   (per-user N-vectors)")
print(f"cascade:        {channels.cascade.shape} (diag(h^H) H)")

# steering vectors are unit-modulus phase ramps
steer = ula_response(0.35, cfg.bst_antennas, cfg.element_spacing)
print(f"\nULA response moduli: {np.abs(steer).round(12)}")

# the cascade really is a row-scaling of the AP->BST matrix
u = 0
oracle = np.conj(channels.bst_user[u])[:, None] * channels.ap_bst[u]
print(f"cascade identity gap (user 0): "
      f"{np.abs(channels.cascade[u] - oracle).max():.2e}")

# effective channel with the tag fully reflecting vs switched off
v_on = effective_channel_matrix(channels, np.ones(cfg.bst_antennas))
v_off = effective_channel_matrix(channels, np.zeros(cfg.bst_antennas))
boost = np.linalg.norm(v_on, axis=1) / np.linalg.norm(v_off, axis=1)
print(f"\nreflection on/off norm ratio: median {np.median(boost):.6f} "
      f"(cascade is ~110 dB below the direct path at this geometry)")
