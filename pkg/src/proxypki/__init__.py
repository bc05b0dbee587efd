"""Proxy-certificate PKI toolkit: path validation, issuance, delegated credentials,
resumption simulation and the scheme comparison matrix."""

from .model import (Certificate, Extensions, FailureMode, KeyPair, KeyUsage, PublicKey, ResumptionPolicy,
                    SignatureScheme, ValidityPeriod, canonical_encode, sign_certificate, verify_signature,
                    within_validity)
from .names import DnsName, Exact, NameSet, Subtree, Wildcard, intersect, matches, member, parse_pattern
from .validation import Reason, ValidationOutcome, split_path, validate, validate_proxy, validate_regular

__version__ = "0.1.0"
