"""Tests for netcore."""
