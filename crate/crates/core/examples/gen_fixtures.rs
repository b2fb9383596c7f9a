//! Writes the 60-GUI fixture corpus used by tests and demos.
//!
//! Usage: `cargo run -p guielicit-core --example gen_fixtures -- [OUT_DIR]`
//! (default `fixtures/corpus`). Also writes the default few-shot exemplars
//! to `few_shot.json` next to the corpus directory. Output is deterministic.

use std::path::PathBuf;

use guielicit_core::corpus::{
    write_corpus, Bounds, ComponentType, CorpusIndex, FilterFlag, GuiComponent, GuiDocument, SCHEMA_VERSION,
};
use guielicit_core::recommend::FewShotLibrary;

use ComponentType as T;

struct Domain {
    key: &'static str,
    app: &'static str,
    noun: &'static str,
    items: [(T, &'static str, &'static str); 12],
}

const KINDS: [(&str, &str); 6] = [
    ("home", "home"),
    ("list", "overview list"),
    ("detail", "detail"),
    ("search", "search"),
    ("profile", "account profile"),
    ("settings", "settings"),
];

const DOMAINS: [Domain; 10] = [
    Domain {
        key: "shop",
        app: "com.example.shop",
        noun: "shopping",
        items: [
            (T::Button, "Add to cart", "add_to_cart_button"),
            (T::Text, "Product price", "product_price"),
            (T::Image, "", "product_image"),
            (T::Text, "Customer reviews", "review_summary"),
            (T::Spinner, "Size", "size_selector"),
            (T::ImageButton, "", ""),
            (T::Button, "Checkout", "checkout_button"),
            (T::Text, "Free shipping", "shipping_info"),
            (T::Checkbox, "Gift wrap", "gift_wrap_option"),
            (T::List, "Recommended products", "recommendation_list"),
            (T::Icon, "", "wishlist_heart_icon"),
            (T::Text, "In stock", "stock_status"),
        ],
    },
    Domain {
        key: "food",
        app: "com.example.fooddelivery",
        noun: "food delivery",
        items: [
            (T::Text, "Restaurant menu", "menu_header"),
            (T::Button, "Order now", "order_button"),
            (T::Text, "Delivery time", "delivery_eta"),
            (T::Image, "", "dish_photo"),
            (T::Text, "Delivery fee", "delivery_fee"),
            (T::ImageButton, "", ""),
            (T::Map, "", "courier_map"),
            (T::Button, "Track order", "track_order_button"),
            (T::TextInput, "Delivery address", "address_input"),
            (T::List, "Popular dishes", "dish_list"),
            (T::Text, "Restaurant rating", "restaurant_rating"),
            (T::Button, "Apply coupon", "coupon_button"),
        ],
    },
    Domain {
        key: "fit",
        app: "com.example.fitness",
        noun: "fitness tracking",
        items: [
            (T::Text, "Steps today", "step_counter"),
            (T::ProgressBar, "Daily goal", "goal_progress"),
            (T::Button, "Start workout", "start_workout_button"),
            (T::Text, "Heart rate", "heart_rate_value"),
            (T::List, "Workout history", "workout_history_list"),
            (T::ImageButton, "", ""),
            (T::Text, "Calories burned", "calorie_count"),
            (T::Switch, "Reminders", "reminder_switch"),
            (T::Slider, "Intensity", "intensity_slider"),
            (T::Text, "Sleep duration", "sleep_summary"),
            (T::Button, "Log water", "water_log_button"),
            (T::Image, "", "activity_chart"),
        ],
    },
    Domain {
        key: "travel",
        app: "com.example.travel",
        noun: "travel booking",
        items: [
            (T::TextInput, "Destination", "destination_input"),
            (T::DatePicker, "Check in date", "checkin_date_picker"),
            (T::Button, "Search flights", "search_flights_button"),
            (T::Text, "Hotel price per night", "hotel_price"),
            (T::Image, "", "hotel_photo"),
            (T::ImageButton, "", ""),
            (T::Spinner, "Guests", "guest_count_spinner"),
            (T::Button, "Book now", "book_button"),
            (T::Map, "", "hotel_location_map"),
            (T::List, "Flight results", "flight_result_list"),
            (T::Text, "Boarding pass", "boarding_pass_info"),
            (T::Checkbox, "Travel insurance", "insurance_option"),
        ],
    },
    Domain {
        key: "bank",
        app: "com.example.bank",
        noun: "mobile banking",
        items: [
            (T::Text, "Account balance", "balance_value"),
            (T::Button, "Transfer money", "transfer_button"),
            (T::List, "Recent transactions", "transaction_list"),
            (T::TextInput, "IBAN", "iban_input"),
            (T::Button, "Pay bill", "pay_bill_button"),
            (T::ImageButton, "", ""),
            (T::Switch, "Card lock", "card_lock_switch"),
            (T::Text, "Spending insights", "spending_chart_title"),
            (T::Image, "", "card_image"),
            (T::Button, "Scan cheque", "scan_cheque_button"),
            (T::Text, "Savings goal", "savings_goal"),
            (T::TextInput, "Amount", "amount_input"),
        ],
    },
    Domain {
        key: "music",
        app: "com.example.music",
        noun: "music streaming",
        items: [
            (T::Button, "Play", "play_button"),
            (T::Slider, "Playback position", "seek_bar"),
            (T::Text, "Song title", "track_title"),
            (T::Image, "", "album_cover"),
            (T::List, "Playlist tracks", "playlist_list"),
            (T::ImageButton, "", ""),
            (T::Button, "Shuffle", "shuffle_button"),
            (T::Text, "Artist name", "artist_name"),
            (T::Button, "Download", "download_button"),
            (T::Switch, "Offline mode", "offline_switch"),
            (T::Text, "Lyrics", "lyrics_view"),
            (T::Slider, "Volume", "volume_slider"),
        ],
    },
    Domain {
        key: "news",
        app: "com.example.news",
        noun: "news reader",
        items: [
            (T::Text, "Headline", "article_headline"),
            (T::Image, "", "article_image"),
            (T::Text, "Breaking news", "breaking_banner"),
            (T::List, "Top stories", "story_list"),
            (T::Button, "Bookmark", "bookmark_button"),
            (T::ImageButton, "", ""),
            (T::Tab, "World", "world_tab"),
            (T::Tab, "Sports", "sports_tab"),
            (T::Text, "Reading time", "read_time_label"),
            (T::Button, "Share article", "share_article_button"),
            (T::Text, "Comments", "comment_count"),
            (T::WebView, "", "article_body"),
        ],
    },
    Domain {
        key: "social",
        app: "com.example.social",
        noun: "social network",
        items: [
            (T::Image, "", "profile_avatar"),
            (T::Text, "Followers", "follower_count"),
            (T::Button, "Follow", "follow_button"),
            (T::List, "News feed", "feed_list"),
            (T::Button, "Like", "like_button"),
            (T::ImageButton, "", ""),
            (T::TextInput, "Write a comment", "comment_input"),
            (T::Button, "Send message", "send_message_button"),
            (T::Text, "Notifications", "notification_badge"),
            (T::Button, "Post photo", "post_photo_button"),
            (T::Text, "Stories", "story_strip"),
            (T::Button, "Invite friends", "invite_button"),
        ],
    },
    Domain {
        key: "recipe",
        app: "com.example.recipes",
        noun: "cooking recipes",
        items: [
            (T::Text, "Ingredients", "ingredient_header"),
            (T::List, "Cooking steps", "step_list"),
            (T::Image, "", "recipe_photo"),
            (T::Text, "Cooking time", "cook_time_label"),
            (T::Spinner, "Servings", "servings_selector"),
            (T::ImageButton, "", ""),
            (T::Button, "Save recipe", "save_recipe_button"),
            (T::Checkbox, "Vegetarian", "vegetarian_filter"),
            (T::Button, "Start timer", "timer_button"),
            (T::Text, "Nutrition facts", "nutrition_table"),
            (T::Button, "Shopping list", "shopping_list_button"),
            (T::Text, "Difficulty", "difficulty_label"),
        ],
    },
    Domain {
        key: "weather",
        app: "com.example.weather",
        noun: "weather forecast",
        items: [
            (T::Text, "Current temperature", "temperature_value"),
            (T::Image, "", "weather_icon"),
            (T::List, "Hourly forecast", "hourly_list"),
            (T::Text, "Humidity", "humidity_value"),
            (T::Text, "Wind speed", "wind_value"),
            (T::ImageButton, "", ""),
            (T::Map, "", "radar_map"),
            (T::Switch, "Severe weather alerts", "alert_switch"),
            (T::List, "Ten day forecast", "daily_list"),
            (T::Text, "Sunrise", "sunrise_time"),
            (T::TextInput, "Search city", "city_search_input"),
            (T::Text, "Air quality", "air_quality_index"),
        ],
    },
];

fn leaf(id: String, ty: T, text: &str, rid: &str, app: &str, slot: i32) -> GuiComponent {
    let top = 160 + slot * 140;
    GuiComponent {
        component_id: id,
        component_type: ty,
        displayed_text: text.to_string(),
        resource_id: if rid.is_empty() { String::new() } else { format!("{app}:id/{rid}") },
        semantic_classes: Vec::new(),
        bounds: Bounds::new(32, top, 1408, top + 120),
        children: Vec::new(),
    }
}

fn container(id: &str, rid: &str, app: &str, bounds: Bounds, children: Vec<GuiComponent>) -> GuiComponent {
    GuiComponent {
        component_id: id.to_string(),
        component_type: T::Container,
        displayed_text: String::new(),
        resource_id: format!("{app}:id/{rid}"),
        semantic_classes: Vec::new(),
        bounds,
        children,
    }
}

fn screen(d: &Domain, di: usize, ki: usize) -> GuiDocument {
    let (kind, kind_label) = KINDS[ki];
    let title = format!("{} {}", capitalize(d.noun), kind_label);
    let toolbar = container(
        "toolbar",
        "toolbar",
        d.app,
        Bounds::new(0, 0, 1440, 140),
        vec![
            GuiComponent {
                component_id: "back".into(),
                component_type: T::Icon,
                displayed_text: String::new(),
                resource_id: String::new(),
                semantic_classes: vec!["back".into()],
                bounds: Bounds::new(0, 0, 140, 140),
                children: Vec::new(),
            },
            leaf("title".into(), T::Text, &title, &format!("{kind}_title"), d.app, -1),
        ],
    );

    // each screen shows 7 of the 12 domain items, rotated by screen kind
    let mut content = Vec::new();
    for j in 0..7 {
        let (ty, text, rid) = d.items[(ki * 2 + j) % 12];
        let c = if ty == T::ImageButton {
            let mut c = leaf(format!("c{j}"), T::ImageButton, "", "", d.app, j as i32);
            c.semantic_classes = vec![match kind {
                "search" => "search".into(),
                "settings" => "settings".into(),
                _ => "menu".into(),
            }];
            c
        } else {
            leaf(format!("c{j}"), ty, text, rid, d.app, j as i32)
        };
        content.push(c);
    }
    let body = container("content", &format!("{kind}_content"), d.app, Bounds::new(0, 140, 1440, 2200), content);

    let nav_items = ["Home", "Search", "Profile"];
    let nav = container(
        "nav",
        "bottom_navigation",
        d.app,
        Bounds::new(0, 2200, 1440, 2560),
        nav_items
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut c = leaf(format!("nav{i}"), T::Tab, t, &format!("nav_{}", t.to_lowercase()), d.app, 0);
                c.bounds = Bounds::new(480 * i as i32, 2200, 480 * (i as i32 + 1), 2560);
                c
            })
            .collect(),
    );

    let root = container("root", "root", d.app, Bounds::new(0, 0, 1440, 2560), vec![toolbar, body, nav]);
    let shown: Vec<&str> = (0..7)
        .map(|j| d.items[(ki * 2 + j) % 12])
        .filter(|(_, text, _)| !text.is_empty())
        .map(|(_, text, _)| text)
        .take(3)
        .collect();
    let descriptions = vec![
        format!("{} screen of a {} app", capitalize(kind_label), d.noun),
        format!("shows {}", shown.join(", ").to_lowercase()),
        format!("{} app {} page with navigation bar", d.noun, kind),
    ];
    let mut filter_flags = std::collections::BTreeSet::new();
    if ki == 5 && di < 4 {
        filter_flags.insert(FilterFlag::OpenedMenu);
    }
    GuiDocument {
        schema_version: SCHEMA_VERSION,
        gui_id: format!("{}_{kind}", d.key),
        app_id: d.app.to_string(),
        screenshot_ref: None,
        language_tag: "en".into(),
        filter_flags,
        s2w_descriptions: descriptions,
        root,
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn main() {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures/corpus"));
    let docs: Vec<GuiDocument> = DOMAINS
        .iter()
        .enumerate()
        .flat_map(|(di, d)| (0..KINDS.len()).map(move |ki| screen(d, di, ki)))
        .collect();
    for d in &docs {
        d.validate().unwrap_or_else(|e| panic!("{}: {e}", d.gui_id));
        assert!(d.component_count() <= 20, "{} has too many components", d.gui_id);
    }
    let index = CorpusIndex::from_documents(docs);
    let manifest = write_corpus(&index, &out).expect("write corpus");
    let few_shot = out.parent().unwrap_or(&out).join("few_shot.json");
    let body = serde_json::to_string_pretty(&FewShotLibrary::default()).expect("few-shot serializes");
    std::fs::write(&few_shot, body + "\n").expect("write few-shot exemplars");
    println!("wrote {} GUIs to {} (hash {})", manifest.count_documents, out.display(), manifest.corpus_hash);
}
