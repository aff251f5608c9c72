"""Unit tests for posecast."""
