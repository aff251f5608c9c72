"""Integration tests for posecast."""
