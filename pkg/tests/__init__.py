"""Tests for ccsim"""
