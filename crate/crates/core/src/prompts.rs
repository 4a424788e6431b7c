//! Prompt templates sent to chat providers.
//!
//! Placeholders are written `{name}` and filled by [`fill`]; any other brace
//! (the JSON examples) passes through untouched.

pub const SYSTEM: &str = "You are a helpful travel planning assistant.";

pub const JUDGE_SYSTEM: &str = "You are an impartial travel plan evaluator.";

pub const EXTRACTION: &str = r#"You are a travel assistant. When a user provides a travel query, extract and organize the information in the following structured format. If certain details (except `Other Requirements`) are not explicitly mentioned, infer them based on the user's query and general travel knowledge. Ensure each field is enclosed in square brackets `[]` for easy parsing. If no `Other Requirements` or `Restaurant Type` are mentioned, leave it blank. If the departure or return time is specified as "morning" assume it means "early morning"

Structured Output Format:
1. Departure Day: [Day of the Week]
2. Return Day: [Day of the Week]
3. Departure Time: [early morning/late morning/afternoon/evening]
4. Return Time: [early morning/late morning/afternoon/evening]
5. Duration: [Number of Days]
6. Departure City: [City Name]
7. Destination City: [City Name]
8. Other Requirements: [List of Requirements]
9. Budget: [Budget]
10. Restaurant Type: [Hot Pot/Fast Food/Northwestern Cuisine/Snacks/Buffet/Seafood/Pizza/Barbecue/Crayfish/Hainan Cuisine/Wontons and Dumplings/Sichuan Cuisine/Southeast Asian Cuisine/Jiangsu and Zhejiang Cuisine/Hunan Cuisine/Yunnan and Guizhou Cuisine/Porridge Shop/Other Delicacies/Rice Noodles/Korean Cuisine/Guangdong cuisine/Japanese Cuisine/Xinjiang Cuisine/Western Cuisine/Northeastern Cuisine/Malatang/Shandong Cuisine/Farmhouse Cuisine/Huaiyang Cuisine/Creative Cuisine/Vegetarian Cuisine/Jiangxi Cuisine/Chaoshan Cuisine/Anhui Cuisine/Taiwanese Cuisine/Tea Restaurant/Home-style Cooking/Hubei Cuisine/Beijing Cuisine/Fujian Cuisine/Guizhou Cuisine/Private Kitchen/Guangxi Cuisine/Hakka Cuisine/Tianjin Cuisine/Shanxi Cuisine/Henan Cuisine/Shaanxi Cuisine]

Example Query:
"I am looking for a 4-day trip from Nanjing to Shenzhen, departing on Saturday early morning and returning on Tuesday afternoon, with a budget of ¥4000. I'm interested in exploring historical sites, cultural landmarks, scenic coastal parks, and relaxing natural retreats, along with enjoying diverse cuisines like seafood, Chaoshan, Hakka, and Guangdong dishes. The itinerary should be moderate in intensity, balancing guided exploration with some downtime."

Expected Response:
Departure Day: [Saturday]
Return Day: [Tuesday]
Departure Time: [early morning]
Return Time: [afternoon]
Duration: [4]
Departure City: [Nanjing]
Destination City: [Shenzhen]
Other Requirements: [exploring historical sites, cultural landmarks, scenic coastal parks and relaxing natural retreats]
Budget: [4000]
Reastaurant Type: [Seafood, Chaoshan Cuisine, Hakka Cuisine, Guangdong cuisine]

Now respond to the user query based on the examples provided above:
{user_query}"#;

pub const INFERENCE: &str = r#"You are a travel assistant. Use the given statistics and the total budget to infer demands. Output exactly the two lines in the required format. No extra text.

Decision Rules
- Hotel Cost (best within budget):
     1) Define nights N from the query, N = travel days - 1.
     2) Per-night hotel budget = (Budget × 0.55) / N.
     3) Categories priority: Luxury > Upscale > Midscale > Economy.
     4) Choose the highest category c with Hotel Prices[c].min_price ≤ per-night hotel budget.
     5) If none fits, choose the cheapest available category.

- Meal Cost Range (allocated from total budget):
     1) Per-day meal budget = (Budget × 0.35) / N.
     2) Output a reasonable integer range based on budget and price statistics.
     3) Make the range slightly broader (not too narrow) to allow more restaurant options.
     4) The cost range can be adjust based on user's cuisin preference.

Ensure each field is enclosed in square brackets `[]` for easy parsing. Organize the information in the following structured format:

Structured Output Format:
1. Hotel Cost: [Luxury/ Upscale/ Midscale/ Economy]
2. Meal Cost Range: [Minimum Cost, Maximum Cost]

Example Response:
Hotel Cost: [Midscale]
Meal Cost Range: [100,200]

Now respond to the user query based on the above information:

User Query:
{user_query}

Price Information:
Trasportation Prices: {transportation_info}
Hotel Prices: {hotel_prices_info}
Restaurant Meal Prices: {meal_prices_info}
Budget: {budget}"#;

pub const AGENTS: &str = r#"You are a Chief Travel Planner. Analyze the user's travel query to identify core motives, constraints, and potential conflicts, then create a set of specialized agent roles in JSON ARRAY format. Each item must include fields:
1. "agent_id"
2. "objective" (measurable; e.g., "minimize average leg distance (km)", "keep total cost ≤ budget", "maximize cultural-hours within opening hours", "ensure all meals within [min,max] CNY")
3. "priorities" (ranked list of rules)
4. "personality" (short traits)

Example Response:
[
    {
        "agent_id": "cultural_scholar",
        "objective": "Maximize the daily 'Cultural and Historical Experience' score (1-10)",
        "priorities": ["Visit museums > 3 h", "World Heritage Sites", "Historic districts"],
        "personality": "Rigorous, inquisitive, dislikes commercialization"
    },
    {
        "agent_id": "foodie_explorer",
        "objective": "Maximize average meal quality score while keeping price ≤ 150 CNY",
        "priorities": ["Try regional cuisines", "Avoid chains", "Prefer authentic local spots"],
        "personality": "Curious, sociable"
    },
    {
        "agent_id": "budget_manager",
        "objective": "Keep total daily cost ≤ budget and maximize value",
        "priorities": ["Use public transport", "Choose economy restaurants"],
        "personality": "Pragmatic, cost-aware"
    }
]

Rules:
1. Generate 4-6 agents depending on the complexity of the query. Fewer if simple, more if conflicting demands exist.
2. Each objective MUST include a measurable component (hours, CNY, km, count, etc.).
3. Avoid vague or filler goals such as "relax" or "take it easy". Instead, replace them with purposeful activities.
4. At least 80% of daylight hours should have active or semi-active plans.
5. STRICT JSON only. No comments, no Markdown.

Now respond based on the user query:
{user_query}"#;

const ACTIVITY_TYPES: &str = r#"     - "transportation": Train or Flight travel between the departure and destination cities.
     - "check-in" / "check-out": Applicable only to hotel accommodations.
     - "sightseeing": Visiting landmarks, scenic spots, cultural sites, street/quarter, and attending performances, the locations should be selected from the attractions section of the Given Information.
     - "meal": Meals at restaurants, cafes, or eateries (excluding breakfast), the locations should be selected from the restaurants section of the Given Information.
     - "local_transfer": Transfer between sequential activities within the same city (e.g., subway, bus, taxi, bicycle, or walking)."#;

pub const DAY_PLAN: &str = r#"You are a Agent with the following profile: {agent_profile}
Your task is to generate a detailed itinerary for [{day_label}] that fulfills your own objectives and priorities while ensuring overall itinerary coherence, balance, and logical flow within the full trip plan. The output Format is a strict JSON object with:
1. agent_id (eg. heritage_historian)
2. day_label (The specific day this plan is for, e.g., "Day 1")
3. daily_cost (The total calculated cost for this day in CNY, including transportation (flights/trains for departure/return days), entrance fees, meals, and hotel expenses for all nights except the final return date)
4. plan (array of steps, where each step is an object with "time", "activity type", "name" and "description")

Example Response:
{
    "agent_id": "heritage_historian",
    "day_label": "Day 1",
    "daily_cost": 1250,
    "plan": [
        {
            "time": "07:45-09:15",
            "activity type": "transportation",
            "name": "CA8219",
            "description": "Travel from Wuhan to Xi'an via flight CA8219."
        }, ...
    ]
}

Rules:
1. Source Integrity: All attractions, restaurants, hotels, and transportations must be strictly selected only from their respective sections in the Given Information, not from any other descriptions or summaries.
2. Traffic and Hotel Information: Day 1 begins with arrival transportation, then transfer to hotel and check-in. The last day ends with hotel check-out then transfer to airport/station and return transportation. The check-in and check-out must each be listed as independent activities (see example).
3. Single Cluster Commitment: Prefer attractions and restaurants within the same cluster to avoid long detours. Restaurants should be chosen near the preceding attraction, i.e., along the travel route.
4. Visit Time and Duration: Every visit must lie within opening_hours and the visit duration must be between the lower and upper bound of recommended duration(0.5 day = 5 hours; 1 day = 10 hours), particularly must not be shorter than the minimum.
5. Time and Sequence Constraint:
     All activities must be sequential and non-overlapping, with total active time between 7-8 hours (except for arrival/departure days). Activities must not end later than 22:30.
     All consecutive activities must be connected by a local_transfer activity, whose duration is estimated based on the distance between consecutive activities (at least 30 minutes), representing the travel between them. No idle gap exceeding 1 hour.
6. Meal Enforcement: Each day must contain lunch and dinner (except for arrival/departure days). Lunch must start between 11:00-14:00 and dinner between 17:00-20:00, and their start times must be at least 5 hours apart. Skipping lunch or dinner is not allowed; breakfast is not allowed.
7. Diversity: The same restaurant or attraction cannot be repeated within the same day or across different days, including those already used in previous days.
8. Budget Guard: Keep total cost within the user's expected range.
9. Preference: Balance cultural/natural/culinary exposure; prefer items that match the user's core motives.
10. It is not permissible for a half-day (morning or afternoon) to be completely empty, unless it is the departure day or the return day.
11. No activities will be scheduled 2 hours before flight departure and 1 hours before train departure.
12. activity type be one of the following: ["transportation", "check-in", "check-out", "sightseeing", "meal", "local_transfer"]
{activity_types}

## GIVEN_INFORMATION
{city_information}

## Previous Days Plan
{previous_days_plan}

## USER QUERY (Must align with it.)
{user_query}

## Hard Rules:
1. Source Integrity: All attractions, restaurants, hotels, and transportations must be strictly selected only from their respective sections in the Given Information, not from any other descriptions or summaries.
2. Traffic and Hotel Information: Day 1 begins with arrival transportation, then transfer to hotel and check-in. The last day ends with hotel check-out then transfer to airport/station and return transportation. The check-in and check-out must each be listed as independent activities (see example).
3. Single Cluster Commitment: Prefer attractions and restaurants within the same cluster to avoid long detours. Restaurants should be chosen near the preceding attraction, i.e., along the travel route.
4. Visit Time and Duration: Every visit must lie within opening_hours and the visit duration must be between the lower and upper bound of recommended duration(0.5 day = 5 hours; 1 day = 10 hours), particularly must not be shorter than the minimum.
5. Time and Sequence Constraint:
     All activities must be sequential and non-overlapping, with total active time between 7-8 hours (except for arrival/departure days). Activities must not end later than 22:30.
     All consecutive activities must be connected by a local_transfer activity, whose duration is estimated based on the distance between consecutive activities (at least 30 minutes), representing the travel between them. No idle gap exceeding 1 hour.
6. Meal Enforcement: Each day must contain lunch and dinner (except for arrival/departure days). Lunch must start between 11:00-14:00 and dinner between 17:00-20:00, and their start times must be at least 5 hours apart. Skipping lunch or dinner is not allowed; breakfast is not allowed.
7. Diversity: The same restaurant or attraction cannot be repeated within the same day or across different days, including those already used in previous days.
8. Budget Guard: Keep total cost within the user's expected range.
9. It is not permissible for a half-day (morning or afternoon) to be completely empty, unless it is the departure day or the return day.
10. No activities will be scheduled 2 hours before flight departure and 1 hours before train departure.
11. activity type be one of the following: ["transportation", "check-in", "check-out", "sightseeing", "meal", "local_transfer"]
{activity_types}

Now response according to the GIVEN_INFORMATION, USER QUERY, and Rules above:"#;

/// Appended to [`DAY_PLAN`] when an agent refines a base route.
pub const SKELETON_SECTION: &str = r#"

## BASE ROUTE SKELETON (refine it toward your objectives; keep it valid)
{skeleton}"#;

pub const REVIEW: &str = r#"You are role-playing as a travel agent with this profile: {reviewer_agent_profile}

Task: Review all competing plans. Judge each plan by your objectives/priorities.

SCORE = BASELINE + PRIORITY_FIT + BONUSES - PENALTIES, then clamp to [-10, +10], integers only.
• -10 only for a truly empty plan (no real content).
• BASELINE = +2 (prevents universal negatives unless a plan is genuinely bad).

A) PRIORITY_FIT (0-10):
0=irrelevant, 3=weak, 6=good, 8=strong, 10=excellent alignment with your priorities.

B) BONUSES (0-6):
+0-3 Spatial coherence (clustered routing, minimal detours)
+0-2 Diversity within theme (non-redundant POIs/meals)
+0-1 Budget/comfort fit (only if your profile cares)

C) PENALTIES (use different discount based on the severity: Minor= -0.5, Major= -1, Critical= -1.5; sum all):
1. Traffic and Hotel Information: Day 1 begins with arrival transportation, then transfer to hotel and check-in. The last day ends with hotel check-out then transfer to airport/station and return transportation.
2. Time and Sequence Constraint: All activities must be sequential and non-overlapping. no idle gap > 1h; include ≥15min transfer.
3. Meal Enforcement: Each day must contain lunch and dinner (except for arrival/departure days). Lunch must start between 11:00-14:00 and dinner between 17:00-20:00, and their start times must be at least 5 hours apart.

Procedure (mental; output only scores):
1) Empty check → if truly empty, score = -10.
2) Compute PRIORITY_FIT, BONUSES, severity-weighted PENALTIES, then raw score = clamp_round(B+F+Bon-Pen, [-10,+10]).
3) Rank & Stretch to force spread (non-empty plans only):
    a) Rank by raw score desc. Tie-breakers: fewer total penalties → higher PRIORITY_FIT → shorter total idle gap → lexicographic agent_id.
    b) Anchor: lift best plan to at least +7, push worst (non-empty) to at most -3 using linear rescale on the ranked list; keep interior order.
    c) Ensure ≥3 distinct integers overall. If collisions remain, nudge neighbors by ±1 (respecting [-10,+10]).
4) Guardrails:
• Never use -10 except for truly empty.
• Do not add commentary or unknown keys.

Your Output Format must be a STRICT JSON object where keys are the "agent_id" of the plans you reviewed.
For each plan, provide:
1. "score": integer [-10, 10]
2. "critique": A short string (max 30 words) explaining the main flaw or strength (e.g., "Good route but ignores budget", "Perfect logical flow").

Example Response:
{
    "cultural_scholar": {
        "score": 9,
        "critique": "Excellent cultural depth and logical route."
    },
    "budget_manager": {
        "score": -2,
        "critique": "Violates opening hours and exceeds budget."
    }
}

Must align with user query: {user_query}

--- ALL COMPETING PLANS ---
{plans_joined}"#;

pub const ARBITRATION: &str = r#"You are the COMMITTEE ARBITRATOR. Fuse multiple agents’ day plans into ONE realistic, feasible, and elegant itinerary for [{day_label}].
Use ONLY items from Given Information (transport, attractions, restaurants, hotels). Do NOT invent names.
daily_cost: The total calculated cost for this day in CNY, including transportation (flights/trains for departure/return days), entrance fees, meals, and hotel expenses for all nights except the final return date)

Example Response:
{
    "day_label": "Day 1",
    "daily_cost": 1250,
    "plan": [
        {
            "time": "07:45-09:15",
            "activity type": "transportation",
            "name": "CA8219",
            "description": "Travel from Wuhan to Xi'an via flight CA8219."
        }, ...
    ]
}

Rules:
1. Source Integrity: All attractions, restaurants, hotels, and transportations must be strictly selected only from their respective sections in the Given Information, not from any other descriptions or summaries.
2. Traffic and Hotel Information: Day 1 begins with arrival transportation, then transfer to hotel and check-in. The last day ends with hotel check-out then transfer to airport/station and return transportation. The check-in and check-out must each be listed as independent activities (see example).
3. Single Cluster Commitment: Prefer attractions and restaurants within the same cluster to avoid long detours. Restaurants should be chosen near the preceding attraction, i.e., along the travel route.
4. Visit Time and Duration: Every visit must lie within opening_hours and the visit duration must be between the lower and upper bound of recommended duration(0.5 day = 5 hours; 1 day = 10 hours), particularly must not be shorter than the minimum.
5. Time and Sequence Constraint:
     All activities must be sequential and non-overlapping, with total active time between 7-8 hours (except for arrival/departure days). Activities must not end later than 22:30.
     There must be a transfer time of at least 30 minutes, estimated based on the distance between consecutive activities, and no idle gap exceeding 1 hour.
6. Meal Enforcement: Each day must contain lunch and dinner (except for arrival/departure days). Lunch must start between 11:00-14:00 and dinner between 17:00-20:00, and their start times must be at least 5 hours apart. Skipping lunch or dinner is not allowed; breakfast is not allowed.
7. Diversity: The same restaurant or attraction cannot be repeated within the same day or across different days, including those already used in previous days.
8. Budget Guard: Keep total cost within the user's expected range.
9. Preference: Balance cultural/natural/culinary exposure; prefer items that match the user's core motives.
10. It is not permissible for a half-day (morning or afternoon) to be completely empty, unless it is the departure day or the return day.
11. No activities will be scheduled 2 hours before flight departure and 1 hours before train departure.
12. activity type be one of the following: ["transportation", "check-in", "check-out", "sightseeing", "meal", "local_transfer"]
{activity_types}

CRITICAL ROUTING INSTRUCTION:
The candidate plans provided are variations of an optimized route. When creating the final plan:
1. Maintain the geographic sequence found in the best-rated candidate plan. Do not rearrange the order of locations arbitrarily, as this increases travel distance.
2. Select the specific POIs (Attractions/Restaurants) that maximize the consensus score, but keep them in the logical time slots.
3. If combining Plan A's morning and Plan B's afternoon, ensure the transition (Local Transfer) is geographically sensible.

### PEER REVIEW INSIGHTS
{critique_summary}

### INPUTS

Given Information: {given_info_text}
Proposals (JSON): {plans_joined}
User Query: {user_query}
Budget: {budget}
Is First Day?: {is_first_day}
Is Last Day?: {is_last_day}
Previous days' plan: {previous_days_plan}"#;

pub const REPAIR: &str = r#"You are a strict travel plan validator & fixer.

Inputs:
- USER_QUERY (budget/duration/interests)
- INITIAL_PLAN (draft)
- GIVEN_INFO (Clusters with Attractions / Restaurants / Hotels, plus Global Transportations)

Hard Constraints (all must pass)
1. Source Integrity: All attractions, restaurants, hotels, and transportations must be strictly selected only from their respective sections in the Given Information, not from any other descriptions or summaries.
2. Traffic and Hotel Information: Day 1 begins with arrival transportation, then transfer to hotel and check-in. The last day ends with hotel check-out then transfer to airport/station and return transportation.
3. Single Cluster & Route Continuity: Prioritize attractions and restaurants within the same cluster to avoid long detours. The itinerary should follow a logical, sequential path, ensuring restaurants are chosen near the preceding attraction and situated directly along the travel route to maintain efficiency.
4. Visit Time and Duration: Every visit must lie within opening_hours and the visit duration must be between the lower and upper bound of recommended duration(0.5 day = 5 hours; 1 day = 10 hours), particularly must not be shorter than the minimum.
5. Time and Sequence Constraint:
     All activities must be sequential and non-overlapping. A minimum transfer time of 30 minutes is required between any two consecutive activities, estimated based on the distance between consecutive activities. Additionally, no idle interval may exceed one hour.
6. Meal Enforcement: Each day must include both lunch and dinner, except on arrival and departure days. If an attraction is described as offering food options (e.g., street food districts or food quarters), a visit scheduled during the lunch or dinner time window is considered to fulfill the corresponding meal requirement, and MUST NOT be represented as a separate meal activity.
7. Diversity: No restaurant or attraction may be visited more than once, either within the same day or across different days, including those already selected in previous days. Moreover, an attraction cannot be used separately for sightseeing and dining; any visit to the same physical location is counted as one single activity.
8. Budget Guard: Keep total cost within the user's expected range.
9. Preference: Balance cultural/natural/culinary exposure; prefer items that match the user's core motives.
10. No activities will be scheduled 2 hours before flight departure and 1 hours before train departure.

Repair Strategy (minimal)
- Replace any non-compliant item with a compliant alternative (prefer same-cluster options).
- If replacement is impossible, drop the slot and tighten/shift neighboring items to avoid >90-minute gaps while staying within hours and recommended durations.
- Always enforce restaurant and attraction diversity, and time continuity.

Output: one JSON object with "day_label", "daily_cost" and "plan" exactly as in the INITIAL_PLAN schema.

Violations found: {violations}

USER_QUERY: {user_query}
INITIAL_PLAN: {initial_plan}
GIVEN_INFO: {given_info_text}
Previous days' plan: {previous_days_plan}"#;

pub const RECALL_SUGGESTION: &str = r#"You are a local travel expert. Suggest attractions in {city} that suit the traveler below. Answer with a JSON array of attraction names only.

Traveler query: {user_query}
Known attractions: {attraction_names}"#;

pub const JUDGE: &str = r#"You are an AI assistant evaluating two travel plans based on following criteria:

### Evaluation Criteria and Key Factors to Consider:
• Experiences: Consider both variety and depth. While a diverse range of activities is beneficial, immersive and well-planned experiences that align closely with traveler interests should also be recognized.
• Itinerary Intensity: Evaluate how well the plan matches the traveler’s desired itinerary intensity (e.g., relaxed, moderate, packed). Balance activities with free time and ensure that no half-day (morning or afternoon) is completely empty, unless it is the arrival or departure day.
• Cuisine: Assess the suitability of dining choices to the traveler’s stated preferences, including cuisine category and alignment with budget.
• Accommodations: Evaluate the quality, comfort, and overall fit with the traveler’s stated preferences, including accommodation category and budget range.
• Transportation: Assess the practicality of transportation options with a focus on departure and return times, convenience, cost, and suitability for the traveler’s preferences.
• Total Budget Consideration: Staying within the budget is essential, but an itinerary that justifies slightly higher costs through premium experiences is viewed positively, whereas strict cost-cutting at the expense of premium experiences is seen as unfavorable.
• Traffic and Hotel Information: Day 1 begins with arrival transportation, then transfer to hotel and check-in. The last day ends with hotel check-out then transfer to airport/station and return transportation.
• Time and Sequence Constraint: All activities must be sequential and non-overlapping. Include a transfer time based on the distance between consecutive activities, and ensure no idle gap exceeds 2 hours.
• Meal Enforcement: Each full day must include lunch and dinner at appropriate times. Their start times must be at least 5 hours apart. Skipping lunch or dinner is not allowed, and breakfast should not be included.
• Diversity: The same restaurant or attraction cannot be repeated within the same day or across different days, including those already used in previous days.

### Scoring Scale (Out of 5)
5 (Excellent): The itinerary exceeds expectations, perfectly aligning with all user preferences. It offers unique, tailored experiences and exceptional value, ensuring a memorable and personalized journey.
4 (Good): The itinerary largely meets the user’s needs, showing a strong level of personalization and value. However, there may be minor gaps in specific preferences or opportunities for deeper engagement that could enhance the overall experience.
3 (Average): The itinerary partially satisfies the user’s query, incorporating some preferences but missing key elements in important areas. It fulfills basic requirements but lacks depth, creativity, or engagement in activities, cultural insights, or personalization, resulting in a feeling of generality and mediocrity.
2 (Poor): The itinerary barely meets expectations, with significant gaps in personalization and relevance. Most elements do not align well with the user’s stated preferences, leading to a less enjoyable and uninspired experience.
1 (Very Poor): The itinerary fails to address the user's query entirely, displaying no relevance to stated preferences. It is completely generic, offering little to no value or consideration for the user's unique needs and interests.

### Output format:
#### Comparative Analysis:
[Please analyze each plan first and then provide a rating in JSON format. Based on the Evaluation Criteria and Key Factors to Consider, provide a detailed comparative analysis of how well each plan meets the traveler’s preferences and the overall quality of each plan, explaining their strengths and weaknesses. Focus your evaluation on the actual schedule (the 'what' and 'when' of each activity). ]

#### Scoring Results:
{
    "Personalization Evaluation": {
        "Scores": {
            "Plan A": X,
            "Plan B": Y
        }
    }
}

### Input
• Query: {query}
• Plan A: {plan_a}
• Plan B: {plan_b}"#;

/// Substitute `{key}` occurrences for every pair in `vars`, in one pass so
/// substituted text is never rescanned.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 1..];
        for (key, value) in vars {
            if tail.starts_with(key) && tail[key.len()..].starts_with('}') {
                out.push_str(value);
                rest = &tail[key.len() + 1..];
                continue 'scan;
            }
        }
        out.push('{');
        rest = tail;
    }
    out.push_str(rest);
    out
}

pub fn extraction_prompt(user_query: &str) -> String {
    fill(EXTRACTION, &[("user_query", user_query)])
}

pub fn inference_prompt(user_query: &str, transport: &str, hotels: &str, meals: &str, budget: &str) -> String {
    fill(
        INFERENCE,
        &[
            ("user_query", user_query),
            ("transportation_info", transport),
            ("hotel_prices_info", hotels),
            ("meal_prices_info", meals),
            ("budget", budget),
        ],
    )
}

pub fn agents_prompt(user_query: &str) -> String {
    fill(AGENTS, &[("user_query", user_query)])
}

pub fn day_plan_prompt(
    agent_profile: &str,
    day_label: &str,
    city_information: &str,
    previous_days_plan: &str,
    user_query: &str,
    skeleton: Option<&str>,
) -> String {
    let mut out = fill(
        DAY_PLAN,
        &[
            ("agent_profile", agent_profile),
            ("day_label", day_label),
            ("activity_types", ACTIVITY_TYPES),
            ("city_information", city_information),
            ("previous_days_plan", previous_days_plan),
            ("user_query", user_query),
        ],
    );
    if let Some(s) = skeleton {
        out.push_str(&fill(SKELETON_SECTION, &[("skeleton", s)]));
    }
    out
}

pub fn review_prompt(reviewer_profile: &str, user_query: &str, plans_joined: &str) -> String {
    fill(
        REVIEW,
        &[
            ("reviewer_agent_profile", reviewer_profile),
            ("user_query", user_query),
            ("plans_joined", plans_joined),
        ],
    )
}

pub struct ArbitrationInputs<'a> {
    pub day_label: &'a str,
    pub critique_summary: &'a str,
    pub given_info_text: &'a str,
    pub plans_joined: &'a str,
    pub user_query: &'a str,
    pub budget: &'a str,
    pub is_first_day: bool,
    pub is_last_day: bool,
    pub previous_days_plan: &'a str,
}

pub fn arbitration_prompt(a: &ArbitrationInputs<'_>) -> String {
    let first = a.is_first_day.to_string();
    let last = a.is_last_day.to_string();
    fill(
        ARBITRATION,
        &[
            ("day_label", a.day_label),
            ("activity_types", ACTIVITY_TYPES),
            ("critique_summary", a.critique_summary),
            ("given_info_text", a.given_info_text),
            ("plans_joined", a.plans_joined),
            ("user_query", a.user_query),
            ("budget", a.budget),
            ("is_first_day", &first),
            ("is_last_day", &last),
            ("previous_days_plan", a.previous_days_plan),
        ],
    )
}

pub fn repair_prompt(
    violations: &str,
    user_query: &str,
    initial_plan: &str,
    given_info_text: &str,
    previous_days_plan: &str,
) -> String {
    fill(
        REPAIR,
        &[
            ("violations", violations),
            ("user_query", user_query),
            ("initial_plan", initial_plan),
            ("given_info_text", given_info_text),
            ("previous_days_plan", previous_days_plan),
        ],
    )
}

pub fn recall_prompt(city: &str, user_query: &str, attraction_names: &str) -> String {
    fill(
        RECALL_SUGGESTION,
        &[("city", city), ("user_query", user_query), ("attraction_names", attraction_names)],
    )
}

pub fn judge_prompt(query: &str, plan_a: &str, plan_b: &str) -> String {
    fill(JUDGE, &[("query", query), ("plan_a", plan_a), ("plan_b", plan_b)])
}

/// Appended to a structured request after its reply failed to parse.
pub fn repair_suffix(error: &str) -> String {
    format!("\n\nYour previous reply could not be parsed ({error}). Reply again with a single valid document in the required format.")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_replaces_known_keys_only() {
        let t = "a {x} {\"json\": 1} {y}{x}";
        assert_eq!(fill(t, &[("x", "1"), ("y", "{x}")]), "a 1 {\"json\": 1} {x}1");
    }

    #[test]
    fn templates_leave_no_known_placeholder_behind() {
        let p = day_plan_prompt("P", "Day 2", "INFO", "PREV", "Q", Some("SK"));
        for key in ["{agent_profile}", "{day_label}", "{activity_types}", "{city_information}", "{skeleton}"] {
            assert!(!p.contains(key), "{key} left in prompt");
        }
        assert!(p.contains("[Day 2]"));
        assert!(p.ends_with("SK"));
        let j = judge_prompt("Q", "A", "B");
        assert!(j.contains("• Plan A: A"));
        assert!(j.contains("\"Plan A\": X"));
    }
}
