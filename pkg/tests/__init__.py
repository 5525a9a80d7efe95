"""Tests for the trajreason package."""
