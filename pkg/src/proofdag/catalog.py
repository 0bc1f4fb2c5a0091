"""Curated instantiation data: abstract entity types and domain profiles.

The entity catalog is fixed at 32 entries; its version string is recorded
in every generated instance so datasets stay regenerable when the catalog
is edited.  Domain profiles supply a scenario name, a one-paragraph
background, and a pool of constants usable as predicate arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["EntityType", "DomainProfile", "ENTITY_TYPES", "DOMAIN_PROFILES", "CATALOG_VERSION"]

CATALOG_VERSION = "1"


@dataclass(frozen=True)
class EntityType:
    name: str
    description: str
    examples: tuple[str, ...]

    @property
    def identifier(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class DomainProfile:
    domain_name: str
    background: str
    constant_pool: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.domain_name or not self.background:
            raise ValueError("domain profile needs a non-empty name and background")


ENTITY_TYPES: tuple[EntityType, ...] = (
    EntityType("Person", "a named individual", ("emma", "liam", "olivia")),
    EntityType("Job", "an occupation or role", ("inspector", "curator", "pilot")),
    EntityType("Device", "an electronic device", ("scanner", "terminal", "beacon")),
    EntityType("Document", "a written record", ("permit_form", "ledger", "manifest")),
    EntityType("Location", "a physical place", ("vault", "harbor", "depot")),
    EntityType("Vehicle", "a means of transport", ("truck", "ferry", "drone")),
    EntityType("Animal", "a living animal", ("falcon", "otter", "ibex")),
    EntityType("Plant", "a plant or crop", ("fern", "orchid", "barley")),
    EntityType("Material", "a raw material", ("alloy", "resin", "quartz")),
    EntityType("Tool", "a hand tool or implement", ("wrench", "caliper", "probe")),
    EntityType("Event", "a scheduled occurrence", ("audit", "launch", "recall")),
    EntityType("Organization", "an institution or company", ("registry", "guild", "bureau")),
    EntityType("Product", "a manufactured good", ("valve", "lens", "cartridge")),
    EntityType("Service", "a provided service", ("delivery", "escrow", "triage")),
    EntityType("Substance", "a chemical substance", ("reagent", "solvent", "catalyst")),
    EntityType("Instrument", "a measuring instrument", ("gauge", "sensor_array", "meter")),
    EntityType("Facility", "a built facility", ("plant_a", "annex", "silo")),
    EntityType("System", "a technical system", ("grid", "pipeline", "relay")),
    EntityType("Process", "an operational process", ("intake", "review", "dispatch")),
    EntityType("Resource", "a consumable resource", ("budget", "bandwidth", "stockpile")),
    EntityType("Account", "a registered account", ("account_a", "account_b", "escrow_acct")),
    EntityType("Contract", "a binding agreement", ("lease", "charter", "warranty")),
    EntityType("Machine", "an industrial machine", ("press", "lathe", "conveyor")),
    EntityType("Sensor", "a monitoring sensor", ("thermostat", "flowmeter", "detector")),
    EntityType("Sample", "a collected specimen", ("sample_1", "core_b", "swab")),
    EntityType("Project", "a planned undertaking", ("expansion", "retrofit", "survey")),
    EntityType("Task", "a unit of work", ("inspection", "backup", "calibration")),
    EntityType("Permit", "an issued authorization", ("visa", "license", "clearance")),
    EntityType("Record", "a stored data record", ("entry_17", "case_file", "log_a")),
    EntityType("Policy", "a governing rule set", ("mandate", "bylaw", "protocol")),
    EntityType("Shipment", "goods in transit", ("crate_9", "pallet", "container")),
    EntityType("Course", "a course of study", ("seminar", "lab_course", "workshop")),
)

assert len(ENTITY_TYPES) == 32
assert len({e.name for e in ENTITY_TYPES}) == 32


DOMAIN_PROFILES: tuple[DomainProfile, ...] = (
    DomainProfile(
        "access control",
        "A secure facility admits staff through layered credential checks. "
        "Badges, PIN codes, biometric scans and escorts each carry their own "
        "clearance rules, and the security desk reasons over them before "
        "anyone passes the inner doors.",
        ("emma", "liam", "vault", "badge_desk", "scanner"),
    ),
    DomainProfile(
        "clinical trials",
        "A research hospital is enrolling volunteers into a staged drug "
        "trial. Eligibility depends on screening results, consent paperwork "
        "and prior treatments, and the review board applies its protocol "
        "rules before approving each participant.",
        ("patient_a", "ward_3", "protocol_x", "consent_form", "dr_ross"),
    ),
    DomainProfile(
        "network security",
        "An operations team monitors a corporate network for intrusions. "
        "Alerts from scanners, firewall states and patch levels feed a rule "
        "book that decides when a host is quarantined and when traffic is "
        "allowed through.",
        ("host_12", "firewall", "subnet_b", "analyst", "patch_kit"),
    ),
    DomainProfile(
        "supply chain",
        "A freight operator routes shipments through customs and regional "
        "depots. Clearance documents, inspection outcomes and carrier "
        "certifications jointly determine whether a container moves to the "
        "next leg of its journey.",
        ("container_7", "depot_east", "customs", "carrier_a", "manifest_3"),
    ),
    DomainProfile(
        "wildlife conservation",
        "A conservancy tracks protected species across several reserves. "
        "Tagging records, habitat surveys and ranger reports drive the rules "
        "for relocating animals and opening corridors between reserves.",
        ("reserve_n", "ranger_team", "corridor_2", "herd_a", "survey_kit"),
    ),
    DomainProfile(
        "manufacturing quality",
        "A factory line certifies parts before shipment. Calibration logs, "
        "inspection passes and supplier attestations are combined by the "
        "quality office to decide which batches leave the floor.",
        ("batch_42", "line_2", "inspector_k", "caliper_9", "supplier_m"),
    ),
    DomainProfile(
        "legal review",
        "A law office screens filings ahead of a hearing. Deadlines, "
        "jurisdiction rules and evidentiary requirements are checked one by "
        "one before a brief is cleared for submission.",
        ("case_218", "clerk", "exhibit_c", "court_5", "counsel_r"),
    ),
    DomainProfile(
        "library services",
        "A university library governs access to its special collections. "
        "Reader cards, curator approvals and preservation constraints "
        "determine who may consult which archive boxes.",
        ("reader_1", "archive_box", "curator_s", "reading_room", "card_77"),
    ),
)
