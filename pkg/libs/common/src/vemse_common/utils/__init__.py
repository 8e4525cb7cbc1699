from vemse_common.utils.seeding import as_generator, frame_rngs, make_rng, seed_sequence

__all__ = ["as_generator", "frame_rngs", "make_rng", "seed_sequence"]
