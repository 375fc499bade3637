"""Anomaly workbench package"""
