"""Test suite for probmu."""
