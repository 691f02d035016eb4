"""
Protocol Obfuscation Toolkit
Specification-driven obfuscation of protocol message formats
"""

__version__ = "1.0.0"
__author__ = "protoobf contributors"
__license__ = "MIT"
