"""Chat-completion client for prompt augmentation.

Ships the three augmentation prompt templates (user input, robot output,
backward-loop insertion), a content-addressed response cache, bounded
retries with exponential backoff, and an in-flight request limit.  The
transport is injectable so the full contract tests run against a fake; the
default transport speaks the OpenAI-style JSON wire format.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests

from .graph import Transition


class CompletionError(Exception):
    code = "completion_error"


class AuthError(CompletionError):
    code = "auth"


class CompletionTimeout(CompletionError):
    code = "timeout"


class TransportError(CompletionError):
    """Transient transport failure; retried."""

    code = "transport"


class RetryExhaustedError(CompletionError):
    code = "retries_exhausted"

    def __init__(self, attempts: int, last: Exception):
        self.attempts = attempts
        self.last = last
        super().__init__(f"gave up after {attempts} attempts: {last}")


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = "http://localhost:8000/v1/chat/completions"
    model: str = "gpt-4o"
    auth_env: str = "OPENAI_API_KEY"
    max_in_flight: int = 4
    retry_limit: int = 3
    timeout: float = 60.0
    cache_dir: str | None = None
    backoff_base: float = 0.5

    def __post_init__(self) -> None:
        if self.retry_limit < 0:
            raise ValueError("retry limit must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max in-flight must be >= 1")


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    few_shots: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.user:
            raise ValueError("user text must be non-empty")

    def messages(self) -> list[dict]:
        msgs = []
        if self.system:
            msgs.append({"role": "system", "content": self.system})
        msgs.append({"role": "user", "content": self.user})
        return msgs


USER_INPUT_TEMPLATE = """\
These examples are four-tuples consisting of the PlantUML diagram, the current state, the next state, and the user input.

{examples}

The user's input explains the change in state from the current state to the next state. For example, if the original state is A, the user might input "A has been completed." or, when a choice is required, the user selects an option based on the next state.
Now I have a four-tuple consisting of the PlantUML diagram, the current state, and the next state, without user inpupt. Your task is to generate the user's input based on the rules provided.

This is the four-tuple need to be filled:
{four_tuple}"""

ROBOT_OUTPUT_TEMPLATE = """\
These examples are five-tuples consisting of the PlantUML diagram, the current state, the next state, user input, and the robot output.

{examples}

The user's input explains the change in state from the current state to the next state. The robot output is related to next state. Robot acts as the server-provider. For example, if the current state is A, tobot might output "Now process A." or, when a choice is required, robot lets user to make a choice.
Now I have a five-tuple consisting of the PlantUML diagram, the current state next state, and the user input, without robot output. Your task is to generate the robot's output based on the rules provided.

This is the five-tuple need to be filled:
{five_tuple}"""

BACKWARD_TEMPLATE = """\
This is a flowchart in PlantUML syntax and the result after adding a loop to itself:

{exemplar}

Your task is to follow this modification rule ro add a loop to the plantuml that I will give you next. The following conditions must be met:
1. The added loop is logical
2. The conditional state of "repeat while" cannot be repeated with the any conditional state that already exists in the original PlantUML
3. Ensure that the syntax of PlantUML is correct
4. Add is([need to loop]) not([jump out of loop]) statements after repeat while as much as possible.

PlantUML to be modified:
{original}"""


def _four_tuple(flowchart_text: str, current: str, next_state: str) -> str:
    return (
        f"PlantUML:\n{flowchart_text}\n"
        f"Current state:\n{current}\n"
        f"Next state:\n{next_state}"
    )


def _five_tuple(
    flowchart_text: str, current: str, next_state: str, user_input: str
) -> str:
    return (
        _four_tuple(flowchart_text, current, next_state)
        + f"\nUser input:\n{user_input}"
    )


def build_user_input_prompt(
    flowchart_text: str,
    current: str,
    next_state: str,
    examples: Sequence[str] = (),
) -> PromptBundle:
    """User-input generation prompt with the four-tuple slot filled."""
    user = USER_INPUT_TEMPLATE.format(
        examples="\n\n".join(examples),
        four_tuple=_four_tuple(flowchart_text, current, next_state),
    )
    return PromptBundle(system="", user=user, few_shots=tuple(examples))


def build_robot_output_prompt(
    flowchart_text: str,
    current: str,
    next_state: str,
    user_input: str,
    examples: Sequence[str] = (),
) -> PromptBundle:
    """Robot-output generation prompt with the five-tuple slot filled."""
    user = ROBOT_OUTPUT_TEMPLATE.format(
        examples="\n\n".join(examples),
        five_tuple=_five_tuple(flowchart_text, current, next_state, user_input),
    )
    return PromptBundle(system="", user=user, few_shots=tuple(examples))


def build_backward_prompt(
    original_plantuml: str, exemplar_pair: tuple[str, str]
) -> PromptBundle:
    """Loop-insertion prompt; the before/after exemplar pair is required."""
    if not exemplar_pair or not exemplar_pair[0] or not exemplar_pair[1]:
        raise ValueError("an original/revised exemplar pair is required")
    before, after = exemplar_pair
    exemplar = f"Original PlantUML:\n{before}\n\nRevised PlantUML:\n{after}"
    user = BACKWARD_TEMPLATE.format(exemplar=exemplar, original=original_plantuml)
    return PromptBundle(system="", user=user, few_shots=(before, after))


class Transport(Protocol):
    def __call__(self, messages: list[dict], config: ProviderConfig) -> str:
        ...


def http_transport(messages: list[dict], config: ProviderConfig) -> str:
    """OpenAI-style JSON chat-completion request/response."""
    token = os.environ.get(config.auth_env)
    if not token:
        raise AuthError(f"environment variable {config.auth_env} is not set")
    try:
        response = requests.post(
            config.endpoint,
            json={"model": config.model, "messages": messages},
            headers={"Authorization": f"Bearer {token}"},
            timeout=config.timeout,
        )
    except requests.Timeout as exc:
        raise CompletionTimeout(str(exc)) from exc
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    if response.status_code in (401, 403):
        raise AuthError(f"auth rejected with HTTP {response.status_code}")
    if response.status_code >= 400:
        raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
    try:
        return response.json()["choices"][0]["message"]["content"]
    except (KeyError, IndexError, ValueError) as exc:
        raise TransportError(f"malformed completion response: {exc}") from exc


class ChatCompletionClient:
    """Shareable client: per-bundle disk cache, retries, in-flight bound."""

    def __init__(
        self,
        config: ProviderConfig,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.transport = transport or http_transport
        self._sleep = sleep
        self._inflight = threading.Semaphore(config.max_in_flight)
        self._cache_locks: dict[str, threading.Lock] = {}
        self._locks_mutex = threading.Lock()

    def cache_key(self, bundle: PromptBundle) -> str:
        payload = json.dumps(
            {
                "model": self.config.model,
                "system": bundle.system,
                "user": bundle.user,
                "few_shots": list(bundle.few_shots),
            },
            ensure_ascii=False,
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _cache_path(self, key: str) -> Path | None:
        if self.config.cache_dir is None:
            return None
        return Path(self.config.cache_dir) / f"{key}.json"

    def _key_lock(self, key: str) -> threading.Lock:
        with self._locks_mutex:
            return self._cache_locks.setdefault(key, threading.Lock())

    def complete(self, bundle: PromptBundle, use_cache: bool = True) -> str:
        key = self.cache_key(bundle)
        path = self._cache_path(key)
        with self._key_lock(key):
            if use_cache and path is not None and path.exists():
                return json.loads(path.read_text(encoding="utf-8"))["response"]
            text = self._complete_with_retries(bundle)
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(
                    json.dumps({"response": text}, ensure_ascii=False),
                    encoding="utf-8",
                )
            return text

    def _complete_with_retries(self, bundle: PromptBundle) -> str:
        messages = bundle.messages()
        last: Exception | None = None
        attempts = self.config.retry_limit + 1
        for attempt in range(attempts):
            try:
                with self._inflight:
                    return self.transport(messages, self.config)
            except AuthError:
                raise
            except (TransportError, CompletionTimeout) as exc:
                last = exc
                if attempt < attempts - 1:
                    self._sleep(self.config.backoff_base * (2**attempt))
        if isinstance(last, CompletionTimeout):
            raise CompletionTimeout(str(last)) from last
        raise RetryExhaustedError(attempts, last)  # type: ignore[arg-type]


def complete(bundle: PromptBundle, config: ProviderConfig) -> str:
    """One-shot convenience wrapper over ChatCompletionClient."""
    return ChatCompletionClient(config).complete(bundle)


class LlmProvider:
    """AugmentationProvider backed by the chat-completion client."""

    def __init__(
        self,
        client: ChatCompletionClient,
        user_examples: Sequence[str] = (),
        robot_examples: Sequence[str] = (),
    ):
        self.client = client
        self.user_examples = tuple(user_examples)
        self.robot_examples = tuple(robot_examples)

    def user_input(self, flowchart_text: str, transition: Transition) -> str:
        bundle = build_user_input_prompt(
            flowchart_text, transition.current, transition.next, self.user_examples
        )
        return self.client.complete(bundle).strip()

    def robot_output(
        self, flowchart_text: str, transition: Transition, user_input: str
    ) -> str:
        bundle = build_robot_output_prompt(
            flowchart_text,
            transition.current,
            transition.next,
            user_input,
            self.robot_examples,
        )
        return self.client.complete(bundle).strip()


def extract_plantuml(text: str) -> str:
    """Pull the @startuml..@enduml block out of a model response."""
    start = text.find("@startuml")
    end = text.rfind("@enduml")
    if start == -1 or end == -1 or end < start:
        raise ValueError("response contains no @startuml..@enduml block")
    return text[start : end + len("@enduml")]
