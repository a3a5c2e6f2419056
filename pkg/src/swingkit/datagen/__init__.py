"""Synthetic swing corpus, wrist-IMU simulation, and dataset persistence."""

from .dataset import (read_dataset, read_manifest, read_tokens, write_dataset,
                      write_tokens)
from .generator import (CLUBS, EVENT_NAMES, SEXES, STYLE_FIELDS, PlayerProfile,
                        SwingRecord, event_fractions, generate_corpus,
                        generate_players, generate_swing, min_jerk,
                        swing_drivers, swing_keyframes)
from .imu import DEFAULT_PLACEMENT, GRAVITY, simulate_imu

__all__ = [
    "CLUBS", "DEFAULT_PLACEMENT", "EVENT_NAMES", "GRAVITY", "PlayerProfile",
    "SEXES", "STYLE_FIELDS", "SwingRecord", "event_fractions", "generate_corpus",
    "generate_players", "generate_swing", "min_jerk", "read_dataset",
    "read_manifest", "read_tokens", "simulate_imu", "swing_drivers",
    "swing_keyframes", "write_dataset", "write_tokens",
]
