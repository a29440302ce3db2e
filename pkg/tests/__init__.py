"""Tests package for tileseg."""
