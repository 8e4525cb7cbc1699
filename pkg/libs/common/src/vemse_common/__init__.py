"""Shared configuration, observability and seeding helpers."""
