import pytest

from app import create_app
from config import TestingConfig
from extensions import db
from models.core import (
    Episode,
    ItemRecord,
    KnowledgeBase,
    Message,
    ParamKind,
    ParamSchema,
    PersonaComponents,
    Role,
    ToolCall,
    ToolSpec,
)
from modules.toolcall_postprocess import ToolAnnotations

COMPARISON_PHRASES = ("more than", "less than", "at least", "at most", "equal to")


@pytest.fixture
def app():
    app = create_app(TestingConfig)
    yield app
    with app.app_context():
        db.session.remove()
        db.drop_all()


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


def make_shop_tools():
    return [
        ToolSpec(
            name="sell_item",
            description="Sell an item from the player's bag to the merchant.",
            parameters={"item": ParamSchema(ParamKind.STRING, required=True)},
        ),
        ToolSpec(
            name="check_items",
            description="Check the price and stock of several items.",
            parameters={"items": ParamSchema(ParamKind.ARRAY, required=True, item_kind=ParamKind.STRING)},
        ),
        ToolSpec(
            name="search_item",
            description="Search the shop for items whose price compares to a value.",
            parameters={
                "operator": ParamSchema(ParamKind.ENUM, allowed_values=COMPARISON_PHRASES),
                "price": ParamSchema(ParamKind.INTEGER, required=True),
                "category": ParamSchema(ParamKind.STRING),
            },
        ),
        ToolSpec(
            name="quest_reward",
            description="Describe the reward of a quest.",
            parameters={
                "quest_name": ParamSchema(ParamKind.STRING, required=True),
                "include_items": ParamSchema(ParamKind.BOOLEAN),
            },
        ),
    ]


def make_knowledge_base():
    return KnowledgeBase({
        "iron_sword": ItemRecord(display_name="Iron Sword", equipped=True, attributes={"price": 120}),
        "healing_potion": ItemRecord(display_name="Healing Potion", attributes={"price": 15}),
        "leather_boots": ItemRecord(display_name="Leather Boots", attributes={"price": 40}),
    })


def make_annotations():
    return ToolAnnotations(
        functions={"sell_item": ["disposal"], "check_items": ["check"]},
        arguments={"item": ["item-reference"], "items": ["item-reference"]},
    )


def make_persona():
    return PersonaComponents(
        state="The merchant is tired after a long market day. She still greets every customer warmly.",
        role="Zara is the owner of the Silver Scale general store. She trades weapons and potions.",
        worldview="The kingdom of Elda recovers from a long war. Adventurers flock to the frontier towns.",
        knowledge="Healing Potion costs 15 gold. Leather Boots cost 40 gold. Iron Sword costs 120 gold.",
        npc_info="Zara is 34 years old. She speaks plainly and likes honest customers.",
    )


def make_episode(episode_id="ep-1", query="I want to sell my Iron Sword.", **overrides):
    data = dict(
        id=episode_id,
        persona=make_persona(),
        messages=(
            Message(Role.USER, "Hello there."),
            Message(Role.ASSISTANT, "Welcome to the Silver Scale!"),
            Message(Role.USER, query),
        ),
        tools=tuple(make_shop_tools()),
        gold_tool_calls=(ToolCall("sell_item", {"item": "iron_sword"}),),
        reference_response="I cannot buy the sword you are holding, friend.",
        knowledge_base=make_knowledge_base(),
    )
    data.update(overrides)
    return Episode(**data)


@pytest.fixture
def shop_tools():
    return make_shop_tools()


@pytest.fixture
def knowledge_base():
    return make_knowledge_base()


@pytest.fixture
def annotations():
    return make_annotations()


@pytest.fixture
def persona():
    return make_persona()


@pytest.fixture
def episode():
    return make_episode()
