"""Ecosystem identifiers and the default Stack Overflow tag alias map."""

ECOSYSTEMS = (
    "python",
    "r",
    "javascript",
    "java",
    "cpp",
    "php",
    "ruby",
    "perl",
    "rust",
    "swift",
    "objectivec",
    "csharp",
)


def _versions(prefix, versions):
    return {f"{prefix}{v}" for v in versions}


DEFAULT_TAG_ALIASES: dict[str, str] = {}

for _tag in (
    {"python", "python-2.x", "python-3.x"}
    | _versions("python-2.", range(4, 8))
    | _versions("python-3.", range(0, 14))
):
    DEFAULT_TAG_ALIASES[_tag] = "python"

DEFAULT_TAG_ALIASES["r"] = "r"

for _tag in ("javascript", "ecmascript-5", "ecmascript-6", "ecmascript-2017"):
    DEFAULT_TAG_ALIASES[_tag] = "javascript"

for _tag in {"java"} | _versions("java-", range(5, 22)):
    DEFAULT_TAG_ALIASES[_tag] = "java"

for _tag in ("c++", "c++98", "c++03", "c++11", "c++14", "c++17", "c++20", "c++23"):
    DEFAULT_TAG_ALIASES[_tag] = "cpp"

for _tag in (
    {"php", "php-7", "php-8"}
    | _versions("php-5.", range(2, 7))
    | _versions("php-7.", range(0, 5))
    | _versions("php-8.", range(0, 4))
):
    DEFAULT_TAG_ALIASES[_tag] = "php"

for _tag in {"ruby", "ruby-1.8", "ruby-1.9"} | _versions("ruby-2.", range(0, 8)) | _versions("ruby-3.", range(0, 4)):
    DEFAULT_TAG_ALIASES[_tag] = "ruby"

DEFAULT_TAG_ALIASES["perl"] = "perl"
DEFAULT_TAG_ALIASES["rust"] = "rust"

for _tag in {"swift", "swift2", "swift3", "swift4", "swift4.2", "swift5"}:
    DEFAULT_TAG_ALIASES[_tag] = "swift"

for _tag in ("objective-c", "objective-c-2.0"):
    DEFAULT_TAG_ALIASES[_tag] = "objectivec"

for _tag in {"c#"} | _versions("c#-", ("2.0", "3.0", "4.0", "5.0", "6.0", "7.0", "8.0", "9.0", "10.0", "11.0")):
    DEFAULT_TAG_ALIASES[_tag] = "csharp"

del _tag
