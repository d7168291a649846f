"""Support tooling for the convint pipeline."""
