"""Configuration management modules"""