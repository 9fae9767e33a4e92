"""Exact per-pursuer observation layout.

The observation is one flat float64 row per pursuer; this module is the
single authority on its index table. The machine-readable descriptor is
consumed by external trainers through the bindings package.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class ObsLayout:
    n_pursuers: int
    k_obstacles: int
    horizon: int

    @property
    def self_dim(self):
        return 10 + 3 * self.horizon

    @property
    def obs_dim(self):
        return self.self_dim + 3 * (self.n_pursuers - 1) + 3 * self.k_obstacles

    @property
    def quat(self):
        return slice(0, 4)

    @property
    def velocity(self):
        return slice(4, 7)

    @property
    def rel_evader(self):
        return slice(7, 10)

    @property
    def pred_evader(self):
        return slice(10, 10 + 3 * self.horizon)

    @property
    def others(self):
        a = self.self_dim
        return slice(a, a + 3 * (self.n_pursuers - 1))

    @property
    def obstacles(self):
        a = self.self_dim + 3 * (self.n_pursuers - 1)
        return slice(a, a + 3 * self.k_obstacles)

    def index_table(self):
        rows = [
            {"name": "quaternion", "start": 0, "stop": 4,
             "description": "orientation (w, x, y, z), body to world"},
            {"name": "velocity", "start": 4, "stop": 7,
             "description": "world-frame linear velocity, m/s"},
            {"name": "rel_evader", "start": 7, "stop": 10,
             "description": "evader position minus own position; mask triple "
                            "when undetected"},
            {"name": "pred_evader", "start": 10, "stop": 10 + 3 * self.horizon,
             "description": f"{self.horizon} predicted future evader "
                            "positions, each relative to own position"},
        ]
        a = self.self_dim
        rows.append({"name": "others", "start": a,
                     "stop": a + 3 * (self.n_pursuers - 1),
                     "description": "relative positions of the other "
                                    "pursuers, ascending index"})
        a += 3 * (self.n_pursuers - 1)
        rows.append({"name": "obstacles", "start": a,
                     "stop": a + 3 * self.k_obstacles,
                     "description": f"relative positions of the "
                                    f"{self.k_obstacles} nearest obstacle "
                                    "centers at own altitude (z component 0); "
                                    "mask triple when fewer obstacles exist"})
        return rows

    def describe(self, mask_value=-5.0):
        return {
            "schema_version": 1,
            "n_pursuers": self.n_pursuers,
            "k_obstacles": self.k_obstacles,
            "horizon": self.horizon,
            "obs_dim": self.obs_dim,
            "mask_value": mask_value,
            "fields": self.index_table(),
        }
