"""Test suite for posecast."""
